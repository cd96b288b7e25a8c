"""Command-line interface.

Exit codes: 0 success, 1 validation/semantic errors (one-line diagnostic on
stderr), 2 I/O errors. Every subcommand is deterministic given its flags and
input files; seeds are always explicit.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import gradcheck as gradcheck_mod
from .config import config_as_dict, load_config
from .core import (
    AnchorBank,
    EmbeddingSet,
    checksum,
    fnv1a,
    load_labels,
    load_matrix,
    store_labels,
    store_matrix,
)
from .descriptor import compute_rd, load_descriptors, store_descriptors
from .errors import DescriptorError
from .evaluation import Protocol, evaluate, report_to_json
from .reduction import load_reduced, reduce_anchors, reduced_rd, store_reduced
from .selection import (
    SelectionMethod,
    fas_select,
    gather,
    load_selection,
    random_select,
    store_selection,
)
from .synth import dataset_digest, generate_dataset, store_manifest
from .training import store_history, train_anchor_bank


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as validation errors (exit 1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise DescriptorError(message)


def _load_embeddings(features_path: str, labels_path: str) -> EmbeddingSet:
    return EmbeddingSet(load_matrix(features_path), load_labels(labels_path))


def cmd_synth(args) -> int:
    cfg = load_config(args.config).synth
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train, gallery, probe = generate_dataset(cfg)
    for name, emb in (("train", train), ("gallery", gallery), ("probe", probe)):
        store_matrix(emb.features, out / f"{name}.rdm")
        store_labels(emb.labels, out / f"{name}.labels")
    digest = dataset_digest(train, gallery, probe)
    store_manifest(cfg, digest, out / "manifest.txt")
    print(f"dataset digest {digest:016x} -> {out}")
    return 0


def cmd_train_anchors(args) -> int:
    from .training import TrainConfig

    emb = _load_embeddings(args.features, args.labels)
    classes = args.classes
    if classes is None:
        classes = int(max(emb.labels.labels)) + 1
    cfg = TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        momentum=args.momentum,
        orl_coefficient=args.orl_coefficient,
        temperature=args.temperature,
        seed=args.seed,
    )
    bank, history = train_anchor_bank(emb, classes, cfg)
    store_matrix(bank.weights, args.out)
    if args.history:
        store_history(history, args.history)
    final = history.epochs[-1]
    print(
        f"trained {bank.dim}x{bank.count} bank: total {final.total:.4f} "
        f"(ce {final.ce:.4f}, orl {final.orl:.4f}), "
        f"mean off-diag |cos| {final.mean_offdiag_cos:.4f}"
    )
    return 0


def cmd_select(args) -> int:
    bank = AnchorBank(load_matrix(args.weights))
    if args.method == "fas":
        sel = fas_select(bank, args.n)
    else:
        if args.seed is None:
            raise DescriptorError("--seed is required for random selection")
        sel = random_select(bank, args.n, args.seed)
    store_selection(sel, args.out)
    print(f"selected {len(sel)} anchors ({sel.method.value}), divergence {sel.divergence:.4f}")
    return 0


def cmd_reduce(args) -> int:
    bank = AnchorBank(load_matrix(args.weights))
    if args.selection:
        sel = load_selection(args.selection)
        bank = gather(bank, sel)
    reduced = reduce_anchors(bank, args.k)
    store_reduced(reduced, args.out)
    print(f"reduced {bank.count} anchors to {reduced.k} directions -> {args.out}")
    return 0


def cmd_describe(args) -> int:
    emb = _load_embeddings(args.features, args.labels)
    if args.reduced:
        rd = reduced_rd(load_reduced(args.bank), emb)
    else:
        rd = compute_rd(AnchorBank(load_matrix(args.bank)), emb)
    store_descriptors(rd, args.out)
    print(f"wrote {len(rd)}x{rd.dim} {rd.kind.value} descriptors -> {args.out}")
    return 0


def _protocol_from_args(args) -> Protocol:
    ks = [int(v) for v in args.ks.split(",") if v.strip()]
    return Protocol(
        exclude_same_sample=not args.keep_same_sample,
        exclude_same_view=args.exclude_same_view,
        ks=ks,
    )


def cmd_eval(args) -> int:
    protocol = _protocol_from_args(args)
    probe_labels = load_labels(args.probe_labels)
    gallery_labels = load_labels(args.gallery_labels)
    if args.kind == "descriptor":
        probe = load_descriptors(args.probe)
        gallery = load_descriptors(args.gallery)
        report = evaluate(
            probe,
            gallery,
            protocol,
            probe_labels=probe_labels,
            gallery_labels=gallery_labels,
            threads=args.threads,
        )
    else:
        probe = EmbeddingSet(load_matrix(args.probe), probe_labels)
        gallery = EmbeddingSet(load_matrix(args.gallery), gallery_labels)
        report = evaluate(probe, gallery, protocol, threads=args.threads)
    print(report.render())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report_to_json(report))
    return 0


def cmd_gradcheck(args) -> int:
    result = gradcheck_mod.run_gradcheck(args.seed)
    print(f"orl max relative error {result.orl_error:.3e}")
    print(f"ce  max relative error {result.ce_error:.3e}")
    ok = result.orl_error <= 1e-5 and result.ce_error <= 1e-5
    if not ok:
        raise DescriptorError("gradient check exceeded 1e-5 relative error")
    return 0


def cmd_pipeline(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    threads = args.threads

    print("[1/6] synth")
    train, gallery, probe = generate_dataset(cfg.synth)
    for name, emb in (("train", train), ("gallery", gallery), ("probe", probe)):
        store_matrix(emb.features, out / f"{name}.rdm")
        store_labels(emb.labels, out / f"{name}.labels")
    digest = dataset_digest(train, gallery, probe)
    store_manifest(cfg.synth, digest, out / "manifest.txt")

    print("[2/6] train-anchors")
    classes = cfg.synth.n_train_ids
    bank, history = train_anchor_bank(train, classes, cfg.train)
    store_matrix(bank.weights, out / "bank.rdm")
    store_history(history, out / "history.csv")

    print("[3/6] select")
    sel = fas_select(bank, cfg.select_n)
    store_selection(sel, out / "selection.json")
    selected = gather(bank, sel)

    print("[4/6] reduce")
    reduced = reduce_anchors(selected, cfg.svd_k)
    store_reduced(reduced, out / "reduced.rdm")

    print("[5/6] describe")
    rd_gallery = reduced_rd(reduced, gallery)
    rd_probe = reduced_rd(reduced, probe)
    store_descriptors(rd_gallery, out / "rd_gallery.rdm")
    store_descriptors(rd_probe, out / "rd_probe.rdm")

    print("[6/6] eval")
    emb_report = evaluate(probe, gallery, cfg.protocol, threads=threads)
    rd_report = evaluate(
        rd_probe,
        rd_gallery,
        cfg.protocol,
        probe_labels=probe.labels,
        gallery_labels=gallery.labels,
        threads=threads,
    )

    doc = {
        "config": config_as_dict(cfg),
        "dataset_digest": f"{digest:016x}",
        "bank_digest": f"{checksum(bank.weights):016x}",
        "selection_indices": sel.indices,
        "selection_divergence": sel.divergence,
        "embedding": emb_report.to_json_dict(),
        "descriptor": rd_report.to_json_dict(),
    }
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
    doc["report_digest"] = f"{fnv1a(canonical):016x}"
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")

    names = ["Rank-" + str(k) for k in cfg.protocol.ks] + ["mAP", "mINP"]
    emb_vals = [emb_report.rank_accuracies[k] for k in cfg.protocol.ks]
    emb_vals += [emb_report.map_value, emb_report.minp_value]
    rd_vals = [rd_report.rank_accuracies[k] for k in cfg.protocol.ks]
    rd_vals += [rd_report.map_value, rd_report.minp_value]
    print(f"{'metric':<10}{'embedding':>12}{'descriptor':>12}")
    for name, ev, rv in zip(names, emb_vals, rd_vals):
        print(f"{name:<10}{ev:>12.2f}{rv:>12.2f}")
    print(f"report digest {doc['report_digest']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="reldesc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parser_class=_Parser, help="generate a synthetic dataset")
    p.add_argument("--config", required=True, help="pipeline config file")
    p.add_argument("--out-dir", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train-anchors", parser_class=_Parser, help="train an anchor bank")
    p.add_argument("--features", required=True, help="training features (RDM1)")
    p.add_argument("--labels", required=True, help="training label file")
    p.add_argument("--classes", type=int, default=None, help="class count (default: max label + 1)")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--orl-coefficient", type=float, default=1.0)
    p.add_argument("--temperature", type=float, default=16.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output bank (RDM1)")
    p.add_argument("--history", default=None, help="optional loss history CSV")
    p.set_defaults(func=cmd_train_anchors)

    p = sub.add_parser("select", parser_class=_Parser, help="pick a diverse anchor subset")
    p.add_argument("--weights", required=True, help="anchor bank (RDM1)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--method", choices=[m.value for m in SelectionMethod], default="fas")
    p.add_argument("--seed", type=int, default=None, help="seed for random selection")
    p.add_argument("--out", required=True, help="output selection JSON")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("reduce", parser_class=_Parser, help="compress anchors by SVD")
    p.add_argument("--weights", required=True, help="anchor bank (RDM1)")
    p.add_argument("--selection", default=None, help="selection JSON to gather first")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", required=True, help="output reduced anchors (RDM1 + .meta)")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("describe", parser_class=_Parser, help="compute relation descriptors")
    p.add_argument("--bank", required=True, help="anchor bank or reduced anchors (RDM1)")
    p.add_argument("--features", required=True, help="embeddings (RDM1)")
    p.add_argument("--labels", required=True, help="matching label file")
    p.add_argument("--reduced", action="store_true", help="bank is reduced anchors with .meta")
    p.add_argument("--out", required=True, help="output descriptors (RDM1 + .meta)")
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("eval", parser_class=_Parser, help="gallery/probe retrieval metrics")
    p.add_argument("--probe", required=True)
    p.add_argument("--gallery", required=True)
    p.add_argument("--probe-labels", required=True)
    p.add_argument("--gallery-labels", required=True)
    p.add_argument("--kind", choices=["embedding", "descriptor"], default="embedding")
    p.add_argument("--keep-same-sample", action="store_true", help="do not drop own sample_id")
    p.add_argument("--exclude-same-view", action="store_true")
    p.add_argument("--ks", default="1,5,10,20")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None, help="optional JSON report path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", parser_class=_Parser, help="finite-difference gradient check")
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("pipeline", parser_class=_Parser, help="run the full synthetic benchmark")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except DescriptorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
