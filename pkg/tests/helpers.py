from discotree.corpus import Document, EduRecord


def make_doc(sents, paras=None, doc_id="d"):
    """Document with one EDU per entry of `sents`; paragraphs default to a single one."""
    paras = paras if paras is not None else [0] * len(sents)
    return Document(doc_id, tuple(EduRecord(f"edu {i}", s, p)
                                  for i, (s, p) in enumerate(zip(sents, paras))))


def random_doc(rng, n_edus, doc_id="d"):
    """Random EDU -> sentence -> paragraph assignment."""
    sents, paras = [0], [0]
    for _ in range(n_edus - 1):
        new_sent = rng.random() < 0.45
        new_para = new_sent and rng.random() < 0.35
        sents.append(sents[-1] + new_sent)
        paras.append(paras[-1] + new_para)
    return make_doc(sents, paras, doc_id)
