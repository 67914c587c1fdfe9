"""Command-line entry point.

Subcommands: synth, sample, train, segment, evaluate, serve, bench. The
global --seed fully determines every output byte of synth/sample/train.

Exit codes: 0 success, 1 unexpected error, 2 usage, 3 missing file,
4 undecodable/unsupported raster, 5 invalid value, 6 dataset layout error.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import kernels
from .clicks import ClickSet
from .data import (
    DatasetError,
    load_dataset,
    load_pairs,
    pairs_from_records,
    read_manifest,
    save_pairs,
    save_scene,
    split_manifest,
    write_manifest,
)
from .graphcut import EnergyParams, build_energy, dump_edges, min_cut, threshold_mask
from .model import ReferenceModel, TrainConfig, load_model, save_model, train
from .raster import CorruptDataError, RasterError, load_image, save_mask
from .sampling import SamplingParams
from .simulate import ComposedSegmenter, evaluate_dataset
from .synth import synth_scene

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_BAD_RASTER = 4
EXIT_BAD_VALUE = 5
EXIT_BAD_DATASET = 6


def _energy_params(args) -> EnergyParams:
    sigma_sq = None if args.sigma_sq == "auto" else float(args.sigma_sq)
    return EnergyParams(
        lam=args.lam,
        sigma_sq=sigma_sq,
        connectivity=args.connectivity,
        hard_radius=args.hard_radius,
        prob_clamp=args.prob_clamp,
    )


def _add_energy_flags(p):
    p.add_argument("--lam", "--lambda", dest="lam", type=float, default=1.0,
                   help="region-term weight (default 1.0)")
    p.add_argument("--sigma-sq", default="auto",
                   help="contrast scale, a float or 'auto' (image mean, default)")
    p.add_argument("--connectivity", type=int, choices=(4, 8), default=8,
                   help="neighborhood (default 8)")
    p.add_argument("--hard-radius", type=int, default=5,
                   help="click constraint disk radius in px (default 5)")
    p.add_argument("--prob-clamp", type=float, default=1e-6,
                   help="probability clamp for the log costs (default 1e-6)")


def cmd_synth(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    entries = []
    for i in range(args.count):
        scene = synth_scene(args.seed * 1_000_003 + i, size=args.size)
        split = "test" if i >= args.count - args.test_count else "train"
        entries.append(save_scene(args.out, f"scene{i:05d}", scene, split=split))
    write_manifest(args.out, entries)
    if args.val_count:
        manifest = split_manifest(read_manifest(args.out), args.val_count, args.seed)
        write_manifest(args.out, manifest["entries"])
    print(f"wrote {args.count} scenes to {args.out}")
    return EXIT_OK


def cmd_sample(args) -> int:
    params = SamplingParams(
        d=args.d, n_pos=args.n_pos, n_neg1=args.n_neg1, n_neg2=args.n_neg2,
        n_neg3=args.n_neg3, n_pairs=args.n_pairs, d_step=args.d_step,
        d_margin=args.d_margin, seed=args.seed,
    )
    records = load_dataset(args.dataset)
    splits = tuple(args.splits.split(","))
    groups = pairs_from_records(
        records, params, flip=not args.no_flip, splits=splits, threads=args.threads
    )
    os.makedirs(args.out, exist_ok=True)
    save_pairs(args.out, groups)
    n = sum(len(p) for _, _, _, p in groups)
    print(f"wrote {n} pairs ({len(groups)} instance groups) to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    pairs = load_pairs(args.pairs)
    if args.max_pairs and len(pairs) > args.max_pairs:
        rng = np.random.default_rng(args.seed)
        keep = rng.choice(len(pairs), size=args.max_pairs, replace=False)
        pairs = [pairs[i] for i in sorted(keep)]
    samples = [p.as_sample() for p in pairs]
    model = ReferenceModel.initialize(seed=args.seed)
    config = TrainConfig(
        learning_rate=args.learning_rate, momentum=args.momentum, epochs=args.epochs,
        batch_size=args.batch_size, seed=args.seed, lr_decay=args.lr_decay,
    )
    if args.verbose:
        print(f"training on {len(samples)} pairs, {model.n_parameters()} parameters")
    model, history = train(model, samples, config)
    save_model(model, args.model_out)
    with open(args.model_out + ".history.json", "w") as f:
        json.dump({"epoch_loss": history}, f, indent=2)
        f.write("\n")
    print(f"saved model to {args.model_out} (final loss {history[-1]:.4f})")
    return EXIT_OK


def _load_clicks(spec: str) -> ClickSet:
    if spec.startswith("@"):
        with open(spec[1:]) as f:
            return ClickSet.from_json(f.read())
    return ClickSet.from_json(spec)


def cmd_segment(args) -> int:
    model = load_model(args.model)
    image = load_image(args.image)
    clicks = _load_clicks(args.clicks)
    params = _energy_params(args)
    seg = ComposedSegmenter(model, params, use_graphcut=not args.no_graphcut)
    if args.dump_graph:
        q = seg.probability(image, clicks)
        with open(args.dump_graph, "w") as f:
            dump_edges(build_energy(image, q, clicks, params), f)
    mask = seg(image, clicks)
    save_mask(mask, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    records = load_dataset(args.dataset)
    splits = tuple(args.splits.split(","))
    dataset = []
    for rec in records:
        if rec.split not in splits:
            continue
        for ti, inst in enumerate(rec.scene.instances):
            dataset.append((f"{rec.scene_id}/{ti}", rec.scene.image, inst))
    thresholds = tuple(float(t) for t in args.thresholds.split(","))
    params = _energy_params(args)
    config = {
        "model": args.model, "dataset": args.dataset, "splits": list(splits),
        "thresholds": list(thresholds), "max_clicks": args.max_clicks,
        "lam": args.lam, "sigma_sq": args.sigma_sq, "connectivity": args.connectivity,
        "hard_radius": args.hard_radius, "graphcut": not args.no_graphcut,
        "kernel_backend": kernels.backend_name(),
    }
    if args.oracle_segmenter:
        # distinct image objects per row so identity lookup is unambiguous
        dataset = [(oid, img.copy(), gt) for oid, img, gt in dataset]
        gt_by_image = {id(img): gt for _, img, gt in dataset}
        seg = lambda image, clicks: gt_by_image[id(image)]  # noqa: E731
        config["oracle"] = True
    else:
        if args.model is None:
            raise ValueError("--model is required unless --oracle-segmenter is set")
        model = load_model(args.model)
        seg = ComposedSegmenter(model, params, use_graphcut=not args.no_graphcut)
    report = evaluate_dataset(
        seg, dataset, thresholds=thresholds, max_clicks=args.max_clicks,
        threads=args.threads, config=config,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "report.json"), "w") as f:
        f.write(report.to_json())
        f.write("\n")
    with open(os.path.join(args.out_dir, "report.txt"), "w") as f:
        f.write(report.text_table())
    with open(os.path.join(args.out_dir, "curves.csv"), "w") as f:
        f.write(report.curves_csv())
    print(report.text_table(), end="")
    print(f"wrote report.json, report.txt, curves.csv to {args.out_dir}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    static_dir = args.static
    if static_dir is None and os.path.isdir("frontend/dist"):
        static_dir = "frontend/dist"
    app = create_app(
        model_path=args.model,
        max_image_dim=args.max_image_dim,
        session_ttl=args.session_ttl,
        static_dir=static_dir,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def cmd_bench(args) -> int:
    from .bench import run_benchmarks

    sizes = tuple(int(s) for s in args.sizes.split(","))
    print(run_benchmarks(sizes=sizes, repeats=args.repeats), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clickseg",
        description="Interactive object selection: clicks to distance maps to "
        "probability maps to an exact graph-cut mask.",
        epilog="exit codes: 0 ok, 1 error, 2 usage, 3 missing file, "
        "4 bad raster, 5 invalid value, 6 dataset error",
    )
    parser.add_argument("--seed", type=int, default=0, help="global RNG seed (default 0)")
    parser.add_argument("--threads", type=int, default=1,
                        help="dataset-level parallelism for sample/evaluate (default 1)")
    parser.add_argument("--verbose", action="store_true", help="extra progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene dataset")
    p.add_argument("--count", type=int, required=True, help="number of scenes")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--size", type=int, default=64, help="scene side length (default 64)")
    p.add_argument("--val-count", type=int, default=0,
                   help="retag this many train scenes as val (seeded)")
    p.add_argument("--test-count", type=int, default=0,
                   help="tag the last N scenes as test")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sample", help="sample training pairs from a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--d", type=int, default=40, help="margin band width (default 40)")
    p.add_argument("--n-pos", type=int, default=5)
    p.add_argument("--n-neg1", type=int, default=10)
    p.add_argument("--n-neg2", type=int, default=5)
    p.add_argument("--n-neg3", type=int, default=10)
    p.add_argument("--n-pairs", type=int, default=15, help="pairs per instance (default 15)")
    p.add_argument("--d-step", type=int, default=10)
    p.add_argument("--d-margin", type=int, default=5)
    p.add_argument("--no-flip", action="store_true", help="skip mirrored scenes")
    p.add_argument("--splits", default="train", help="comma list of splits to sample from")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("train", help="train the reference model on sampled pairs")
    p.add_argument("--pairs", required=True, help="pairs directory")
    p.add_argument("--model-out", required=True)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--epochs", type=int, default=2)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--lr-decay", type=float, default=0.99)
    p.add_argument("--max-pairs", type=int, default=0,
                   help="cap the pair count with a seeded subsample (0 = all)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("segment", help="segment one image from a clicks JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--clicks", required=True,
                   help='inline JSON {"positives": [[r,c],...], "negatives": [...]} or @file')
    p.add_argument("--out", required=True, help="output mask PNG")
    p.add_argument("--no-graphcut", action="store_true",
                   help="write the 0.5-threshold mask instead of the refined one")
    p.add_argument("--dump-graph", default=None, help="write the energy edge list here")
    _add_energy_flags(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("evaluate", help="simulated-clicker benchmark over a dataset")
    p.add_argument("--model", default=None)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--splits", default="test", help="comma list of splits (default test)")
    p.add_argument("--thresholds", default="0.85,0.9", help="comma list of IU thresholds")
    p.add_argument("--max-clicks", type=int, default=20)
    p.add_argument("--no-graphcut", action="store_true")
    p.add_argument("--oracle-segmenter", action="store_true", help=argparse.SUPPRESS)
    _add_energy_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="run the HTTP segmentation service")
    p.add_argument("--model", default=os.environ.get("CLICKSEG_MODEL"),
                   help="model file (flag > CLICKSEG_MODEL env)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--max-image-dim", type=int,
                   default=int(os.environ.get("CLICKSEG_MAX_IMAGE_DIM", "1024")))
    p.add_argument("--session-ttl", type=float,
                   default=float(os.environ.get("CLICKSEG_SESSION_TTL", "1800")),
                   help="idle session lifetime in seconds (default 1800)")
    p.add_argument("--static", default=os.environ.get("CLICKSEG_STATIC"),
                   help="static web UI directory (default: frontend/dist if present)")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("bench", help="compare compiled and pure-Python kernels")
    p.add_argument("--sizes", default="64,128,256", help="comma list of grid sizes")
    p.add_argument("--repeats", type=int, default=3)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except (CorruptDataError, RasterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_RASTER
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_DATASET
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_VALUE
    except Exception as exc:  # pragma: no cover - unexpected
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
