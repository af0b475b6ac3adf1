"""Command line pipeline: segment -> gentree -> transform -> eval.

Stages talk to each other only through files in the output directory, so
probabilities from an external segmenter can replace the built-in cohesion
scorer without touching the rest of the pipeline.

Corpus directory layout::

    DIR/*.json        JSON documents (``{"id", "edus": [{"text", "sent", "para"}], "genre"?}``)
    DIR/*.txt         plain documents, one sentence per line, blank line = paragraph break
    DIR/gold.trees    optional gold trees, ``doc_id<TAB>(...)``, EDU or sentence leaves
    DIR/gold.seg.jsonl  optional gold segmentations; paragraph breaks are used otherwise
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .boundary import (
    BoundarySeq, Segmentation, binarize, cohesion_scores, format_probs, format_segmentations,
    load_segmentations, parse_prob_record, pk_score, read_jsonl,
)
from .corpus import (
    DiscTree, Granularity, corpus_stats, format_tree_lines, infer_granularity, load_corpus,
    parse_tree, read_tree_lines,
)
from .errors import ConfigError, DiscoTreeError, EmptyTotal
from .parseval import Convention, evaluate, format_table
from .transform import LevelSpec, to_level
from .treegen import GenMethod, MethodKind, generate

log = logging.getLogger("discotree")

DEFAULTS = {
    "corpus": None,
    "probs": None,
    "pred": None,
    "gold": None,
    "gold_seg": None,
    "method": "greedy",
    "gamma": None,
    "seed": 1,
    "runs": 10,
    "levels": "s-p,p-d,s-d",
    "convention": "both",
    "out": "out",
    "jobs": 1,
    "window": 2,
    "tau": None,
}

NOTES = [
    "forests are scored per scope tree (each restricted tree keeps its own root)",
    "fragments orphaned by upper-bound restriction are recombined right-branching",
]


class StageError(DiscoTreeError):
    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


# ---------------------------------------------------------------------------
# Config


def load_config(args: argparse.Namespace) -> dict:
    """Defaults, then the JSON config file, then explicit flags."""
    config = dict(DEFAULTS)
    config["_file_keys"] = []
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except ValueError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        config.update(data)
        config["_file_keys"] = sorted(data)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    if config["corpus"] is None:
        raise ConfigError("--corpus is required")
    if not Path(config["corpus"]).is_dir():
        raise ConfigError(f"corpus directory not found: {config['corpus']}")
    for key in ("probs", "pred", "gold", "gold_seg"):
        if config[key] is not None and not Path(config[key]).is_file():
            raise ConfigError(f"--{key.replace('_', '-')} file not found: {config[key]}")
    try:
        config["_levels"] = [LevelSpec.parse(x) for x in str(config["levels"]).split(",") if x]
    except (ValueError, DiscoTreeError) as exc:
        raise ConfigError(str(exc)) from exc
    conv = str(config["convention"]).lower()
    if conv not in ("rst", "orig", "both"):
        raise ConfigError(f"--convention must be rst, orig or both, got {conv!r}")
    config["_conventions"] = ([Convention.RST_PARSEVAL, Convention.ORIG_PARSEVAL]
                              if conv == "both" else [Convention.parse(conv)])
    if int(config["jobs"]) < 1 or int(config["window"]) < 1 or int(config["runs"]) < 1:
        raise ConfigError("--jobs, --window and --runs must be positive")
    return config


def config_hash(config: dict) -> str:
    public = {k: v for k, v in config.items() if not k.startswith("_")}
    blob = json.dumps(public, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def method_from_config(config: dict, kind=None, seed=None) -> GenMethod:
    try:
        kind = MethodKind(kind or config["method"])
    except ValueError as exc:
        raise ConfigError(f"unknown method {config['method']!r}") from exc
    if kind is MethodKind.CKY and config["gamma"] is None:
        raise ConfigError("--gamma is required for the cky method")
    try:
        if kind is MethodKind.CKY:
            return GenMethod(kind, gamma=float(config["gamma"]))
        if kind is MethodKind.RANDOM:
            return GenMethod(kind, seed=int(config["seed"] if seed is None else seed))
        return GenMethod(kind)
    except (ValueError, DiscoTreeError) as exc:
        raise ConfigError(str(exc)) from exc


def meta(config: dict) -> dict:
    return {"config_hash": config_hash(config), "version": __version__, "notes": NOTES}


# ---------------------------------------------------------------------------
# IO helpers


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _map(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


def _out(config) -> Path:
    return Path(config["out"])


def _docs(config):
    return load_corpus(config["corpus"])


def _read_trees(path, docs, stage) -> dict[str, DiscTree]:
    raw = read_tree_lines(path)
    trees = {}
    for doc in docs:
        if doc.id not in raw:
            continue
        try:
            g = infer_granularity(raw[doc.id], doc)
            trees[doc.id] = parse_tree(raw[doc.id], g, doc.n_units(g))
        except DiscoTreeError as exc:
            raise StageError(stage, f"{path}: {doc.id}: {exc}") from exc
    return trees


# ---------------------------------------------------------------------------
# Stages


def _score_doc(args):
    doc, window = args
    if doc.n_sentences < 2:
        return BoundarySeq(doc.id, ())
    return cohesion_scores(doc, window)


def cmd_segment(config: dict) -> int:
    docs = _docs(config)
    out = _out(config)
    if config["probs"]:
        by_id = {d.id: d for d in docs}
        try:
            seqs = [parse_prob_record(rec, by_id) for rec in read_jsonl(config["probs"])]
        except DiscoTreeError as exc:
            raise StageError("segment", f"{config['probs']}: {exc}") from exc
    else:
        seqs = _map(_score_doc, [(d, int(config["window"])) for d in docs], int(config["jobs"]))
    write_atomic(out / "probs.jsonl", format_probs(seqs))
    log.info("segment: wrote %d probability records", len(seqs))

    if config["tau"] is not None:
        tau = float(config["tau"])
        gold_path = config["gold_seg"] or Path(config["corpus"]) / "gold.seg.jsonl"
        if Path(gold_path).is_file():
            gold = load_segmentations(gold_path, docs)
        else:
            gold = {d.id: Segmentation.from_paragraphs(d) for d in docs}
        hyp = {s.doc_id: binarize(s, tau) for s in seqs}
        write_atomic(out / "segments.jsonl", format_segmentations(hyp))
        per_doc, skipped = {}, []
        for s in seqs:
            try:
                per_doc[s.doc_id] = pk_score(gold[s.doc_id], hyp[s.doc_id])
            except DiscoTreeError:
                skipped.append(s.doc_id)
        report = {
            "meta": meta(config),
            "tau": round(tau, 6),
            "mean_pk": round(sum(per_doc.values()) / len(per_doc), 6) if per_doc else None,
            "per_doc": {k: round(v, 6) for k, v in per_doc.items()},
            "skipped_too_short": skipped,
        }
        write_atomic(out / "pk_report.json", dump_json(report))
    return 0


def _gen_doc(args):
    method, doc_id, k, probs = args
    seq = BoundarySeq(doc_id, probs) if probs is not None else None
    return doc_id, generate(method, seq, k=k)


def generate_trees(config: dict, docs, method: GenMethod, stage="gentree"):
    """Trees for every document; returns (trees, failures)."""
    failures: dict[str, str] = {}
    jobs = []
    probs_by_id: dict[str, tuple] = {}
    if method.needs_probs:
        probs_path = config["probs"] or _out(config) / "probs.jsonl"
        if not Path(probs_path).is_file():
            raise StageError(stage, f"probability file not found: {probs_path}")
        by_id = {d.id: d for d in docs}
        for lineno, line in enumerate(Path(probs_path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                doc_id = rec["doc_id"]
            except (json.JSONDecodeError, KeyError, TypeError):
                failures[f"<line {lineno}>"] = "unreadable probability record"
                continue
            try:
                probs_by_id[doc_id] = parse_prob_record(rec, by_id).probs
            except DiscoTreeError as exc:
                failures[str(doc_id)] = f"{type(exc).__name__}: {exc}"
    for doc in docs:
        if method.needs_probs:
            if doc.id in failures:
                continue
            if doc.id not in probs_by_id:
                failures[doc.id] = "no probability record"
                continue
            jobs.append((method, doc.id, doc.n_sentences, probs_by_id[doc.id]))
        else:
            jobs.append((method, doc.id, doc.n_sentences, None))
    trees = dict(_map(_gen_doc, jobs, int(config["jobs"])))
    return trees, failures


def cmd_gentree(config: dict) -> int:
    docs = _docs(config)
    method = method_from_config(config)
    trees, failures = generate_trees(config, docs, method)
    out = _out(config)
    write_atomic(out / "trees.txt", format_tree_lines(trees))
    manifest = {**method.manifest(), "meta": meta(config), "failures": failures}
    write_atomic(out / "trees.manifest.json", dump_json(manifest))
    if failures:
        for doc_id, why in failures.items():
            log.error("gentree: %s: %s", doc_id, why)
        raise StageError("gentree", f"{len(failures)} document(s) failed: {sorted(failures)}")
    return 0


def cmd_transform(config: dict) -> int:
    docs = _docs(config)
    out = _out(config)
    sources = {"pred": config["pred"] or out / "trees.txt"}
    gold_path = config["gold"] or Path(config["corpus"]) / "gold.trees"
    if Path(gold_path).is_file():
        sources["gold"] = gold_path
    if not Path(sources["pred"]).is_file():
        raise StageError("transform", f"tree file not found: {sources['pred']}")
    for name, path in sources.items():
        trees = _read_trees(path, docs, "transform")
        for level in config["_levels"]:
            lines = []
            for doc in docs:
                if doc.id in trees:
                    try:
                        lines.append(to_level(trees[doc.id], doc, level).to_lines())
                    except DiscoTreeError as exc:
                        raise StageError("transform", f"{doc.id} at {level}: {exc}") from exc
            write_atomic(out / f"forest.{level.name}.{name}.txt", "".join(lines))
    return 0


def _score(pred, gold, docs, level, conv):
    try:
        report = evaluate(pred, gold, docs, level, conv)
    except EmptyTotal:
        return None, None
    return report.precision, report


def cmd_eval(config: dict) -> int:
    docs = _docs(config)
    out = _out(config)
    gold_path = config["gold"] or Path(config["corpus"]) / "gold.trees"
    if not Path(gold_path).is_file():
        raise StageError("eval", f"gold tree file not found: {gold_path}")
    gold = _read_trees(gold_path, docs, "eval")
    docs = [d for d in docs if d.id in gold]
    if not docs:
        raise StageError("eval", "no document has a gold tree")

    runs: list[tuple[str, dict]] = []
    if config["pred"] is None and config.get("_method_explicit"):
        method = method_from_config(config)
        if method.kind is MethodKind.RANDOM:
            base = int(config["seed"])
            for seed in range(base, base + int(config["runs"])):
                m = method_from_config(config, seed=seed)
                trees, failures = generate_trees(config, docs, m, stage="eval")
                runs.append((str(seed), trees))
        else:
            trees, failures = generate_trees(config, docs, method, stage="eval")
            if failures:
                raise StageError("eval", f"could not generate trees for {sorted(failures)}")
            runs.append(("", trees))
        label = method.kind.value
        manifest = method.manifest()
    else:
        pred_path = Path(config["pred"] or out / "trees.txt")
        if not pred_path.is_file():
            raise StageError("eval", f"prediction file not found: {pred_path}")
        runs.append(("", _read_trees(pred_path, docs, "eval")))
        manifest_path = pred_path.with_name(pred_path.stem + ".manifest.json")
        manifest = {}
        if manifest_path.is_file():
            manifest = {k: v for k, v in json.loads(manifest_path.read_text()).items()
                        if k in ("method", "gamma", "seed")}
        label = manifest.get("method", pred_path.stem)

    results: dict = {}
    table_rows: dict[str, dict] = {}
    for level in config["_levels"]:
        results[level.name] = {}
        for conv in config["_conventions"]:
            per_run = {}
            last_report = None
            for run_id, trees in runs:
                try:
                    precision, report = _score(trees, gold, docs, level, conv)
                except DiscoTreeError as exc:
                    raise StageError("eval", f"{level}/{conv.value}: {exc}") from exc
                per_run[run_id] = precision
                last_report = report
            row = table_rows.setdefault(f"{label} [{conv.value}]", {})
            if len(runs) == 1:
                entry = last_report.to_json() if last_report is not None else {
                    "precision": None, "note": "no spans at this level"}
                row[level.name] = per_run[""]
            else:
                vals = [v for v in per_run.values() if v is not None]
                mean = sum(vals) / len(vals) if vals else None
                entry = {
                    "mean": round(mean, 6) if mean is not None else None,
                    "per_seed": {k: (round(v, 6) if v is not None else None)
                                 for k, v in per_run.items()},
                }
                row[level.name] = mean
            results[level.name][conv.value] = entry

    report = {"meta": meta(config), "method": manifest, "results": results}
    write_atomic(out / "eval.json", dump_json(report))
    table = format_table(table_rows, [lv.name for lv in config["_levels"]])
    write_atomic(out / "eval.txt", table)
    print(table, end="")
    return 0


def cmd_stats(config: dict) -> int:
    stats = corpus_stats(_docs(config))
    rows = stats.rows()
    text = "".join(f"{name:<18}{value:>14.6f}\n" if isinstance(value, float)
                   else f"{name:<18}{value:>14d}\n" for name, value in rows)
    write_atomic(_out(config) / "stats.txt", text)
    write_atomic(_out(config) / "stats.json", dump_json({
        "meta": meta(config), **{name: round(v, 6) for name, v in rows}}))
    print(text, end="")
    return 0


def cmd_pipeline(config: dict) -> int:
    method = method_from_config(config)
    if config["tau"] is not None or (method.needs_probs and config["probs"] is None):
        cmd_segment(config)
    cmd_gentree(config)
    gold_path = config["gold"] or Path(config["corpus"]) / "gold.trees"
    if Path(gold_path).is_file():
        cmd_transform(config)
        cmd_eval(dict(config, pred=str(_out(config) / "trees.txt")))
    return 0


COMMANDS = {
    "segment": cmd_segment,
    "gentree": cmd_gentree,
    "transform": cmd_transform,
    "eval": cmd_eval,
    "pipeline": cmd_pipeline,
    "stats": cmd_stats,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="discotree", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file mirroring the flags; flags win")
        p.add_argument("--corpus", help="corpus directory")
        p.add_argument("--probs", help="probability JSONL (skips the cohesion scorer)")
        p.add_argument("--pred", help="predicted tree file (eval/transform)")
        p.add_argument("--gold", help="gold tree file (default CORPUS/gold.trees)")
        p.add_argument("--gold-seg", dest="gold_seg", help="gold segmentation JSONL")
        p.add_argument("--method", choices=[m.value for m in MethodKind])
        p.add_argument("--gamma", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--runs", type=int, help="seeds per random evaluation (default 10)")
        p.add_argument("--levels", help="comma-separated, e.g. s-p,p-d,s-d")
        p.add_argument("--convention", choices=["rst", "orig", "both"])
        p.add_argument("--out", help="output directory (default ./out)")
        p.add_argument("--jobs", type=int)
        p.add_argument("--window", type=int, help="cohesion scorer window")
        p.add_argument("--tau", type=float, help="threshold for Pk evaluation")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        config = load_config(args)
        config["_method_explicit"] = args.method is not None or "method" in config["_file_keys"]
        return COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"discotree: config error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"discotree: {exc}", file=sys.stderr)
        return 1
    except (DiscoTreeError, OSError) as exc:
        print(f"discotree: [{args.command}] {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
