"""
Leaky units and level projection
================================

Gold trees are built over EDUs, but generated trees live at sentence level.
Projecting the gold tree means trimming it to sentences and, for the S-P level,
cutting it into one tree per paragraph.
"""

from discotree.corpus import Document, EduRecord, parse_tree
from discotree.transform import is_leaky, leaky_attach, to_level, trim_to_lower

# seven EDUs in three sentences; the middle sentence has five EDUs
sents = [0, 1, 1, 1, 1, 1, 2]
doc = Document("demo", tuple(EduRecord(f"edu {i}", s, 0) for i, s in enumerate(sents)))

###############################################################################
# In this tree the middle sentence never forms its own subtree: three of its
# EDUs join sentence 0 and two join sentence 2.

gold = parse_tree("((0 (1 (2 3))) ((4 5) 6))", "edu")
print("leaky:", is_leaky(gold, doc, "sent"))

###############################################################################
# The largest fragment keeps its place, so the whole sentence moves left.

print("repaired EDU tree:", leaky_attach(gold, doc, "sent").to_bracket())
print("sentence tree    :", trim_to_lower(gold, doc, "sent").to_bracket())

###############################################################################
# Paragraph structure: sentences 0-1 form paragraph 0, sentence 2 paragraph 1.

doc2 = Document("demo", tuple(EduRecord(f"edu {i}", s, 0 if s < 2 else 1)
                              for i, s in enumerate(sents)))
print(to_level(gold, doc2, "s-p").to_lines(), end="")
print(to_level(gold, doc2, "p-d").to_lines(), end="")
