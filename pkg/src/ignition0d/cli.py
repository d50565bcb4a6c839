"""Command-line interface: data generation, training, evaluation, sweeps, plots.

Every command writes a manifest.json recording the resolved configuration,
package version, and SHA-256 of each output file; `replay` reruns a command
from its manifest and verifies the outputs hash-identically. The PNODE_SEED
environment variable overrides any --seed flag. Exit codes: 0 success,
1 runtime failure, 2 bad flags.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, baselines, datagen, pnode
from .datagen import Dataset, OracleLaw, oracle_trajectory, sample_dataset, sweep_grid
from .pnode import ETA_NAMES, TrainOptions
from .scenario import load_scenario
from .svgplot import heatmap_svg, line_chart_svg


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _resolve_seed(seed: int) -> int:
    env = os.environ.get("PNODE_SEED")
    return int(env) if env else int(seed)


def _write_manifest(out_dir: Path, command: str, config: dict, outputs) -> Path:
    manifest = {
        "command": command,
        "config": config,
        "package_version": __version__,
        "outputs": {name: _sha256(out_dir / name) for name in sorted(outputs)},
    }
    path = out_dir / "manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return path


def _parse_dims(text: str) -> tuple:
    dims = tuple(d.strip() for d in text.split(",") if d.strip())
    for d in dims:
        if d not in ETA_NAMES:
            raise ValueError(f"unknown dimension '{d}' (choose from {ETA_NAMES})")
    return dims


def _parse_arch(text: str) -> tuple:
    """'2x50' -> (50, 50); '64' -> (64,)."""
    text = text.lower().strip()
    if "x" in text:
        depth, width = text.split("x", 1)
        return (int(width),) * int(depth)
    return (int(text),)


# -- commands -----------------------------------------------------------

def cmd_gen(args) -> dict:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = _resolve_seed(args.seed)
    dims = _parse_dims(args.dims) if args.dims else ETA_NAMES
    ds = sample_dataset(args.n, seed, active_dims=dims, jobs=args.jobs)
    ds.save(out / "dataset.json")
    config = {"n": args.n, "seed": seed, "dims": list(dims), "jobs": 1}
    _write_manifest(out, "gen", config, ["dataset.json"])
    print(f"wrote {out / 'dataset.json'} ({args.n} samples)")
    return config


def cmd_train(args) -> dict:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = _resolve_seed(args.seed)
    scn = load_scenario()
    ds = Dataset.load(args.data)
    model = pnode.new_model(scn, hidden=_parse_arch(args.arch), seed=seed)
    trained, result = pnode.train(
        model, ds, TrainOptions(max_iters=args.max_iters, grad_tol=args.grad_tol,
                                jobs=args.jobs), scn)
    pnode.save_checkpoint(out / "checkpoint.json", trained)
    with open(out / "train_log.csv", "w", encoding="utf-8") as fh:
        fh.write("iter,loss,grad_inf_norm,step_length\n")
        for row in result.history:
            fh.write(",".join(f"{v:.17g}" if isinstance(v, float) else str(v)
                              for v in row) + "\n")
    config = {"data": str(args.data), "arch": args.arch, "seed": seed,
              "max_iters": args.max_iters, "grad_tol": args.grad_tol, "jobs": 1}
    _write_manifest(out, "train", config, ["checkpoint.json", "train_log.csv"])
    print(f"trained: status={result.status} iters={result.n_iters} "
          f"loss={result.loss:.6g}")
    return config


def _predict_final_T(model, scn, eta_rows, progress=False):
    out = np.empty(len(eta_rows))
    state0 = scn.initial_state()
    for i, row in enumerate(eta_rows):
        eta = pnode.LaserParams.from_array(row)
        traj = pnode.predict(model, eta, scn.config_for(eta.MaF), state0)
        out[i] = traj.final_T
    return out


def cmd_eval(args) -> dict:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = _resolve_seed(args.split_seed)
    scn = load_scenario()
    ds = Dataset.load(args.data)
    n_train = args.train_n if args.train_n else int(round(0.7 * len(ds)))
    train_ds, test_ds = ds.split(n_train, seed)
    if len(test_ds) == 0:
        raise ValueError("empty test split; lower --train-n")
    truth = test_ds.final_T
    which = [b.strip() for b in args.baselines.split(",") if b.strip()] \
        if args.baselines else []

    predictions = {}
    outputs = []
    if args.model:
        model = pnode.load_checkpoint(args.model)
        predictions["pnode"] = _predict_final_T(model, scn, test_ds.eta)
    if "krr" in which:
        krr = baselines.RbfKernelRidge().fit(train_ds.eta, train_ds.final_T)
        predictions["krr"] = krr.predict(test_ds.eta)
        baselines.save_krr(out / "krr_model.json", krr)
        outputs.append("krr_model.json")
    if "nn" in which:
        hidden = _parse_arch(args.arch)
        nn = baselines.MlpRegressor(hidden=hidden, seed=seed,
                                    max_iters=args.nn_max_iters)
        nn.fit(train_ds.eta, train_ds.final_T)
        predictions["nn"] = nn.predict(test_ds.eta)
        baselines.save_mlp(out / "nn_model.json", nn)
        outputs.append("nn_model.json")
    if not predictions:
        raise ValueError("nothing to evaluate: pass --model and/or --baselines")

    # DBSCAN stratification of the test points, one pass per outcome class
    ign_mask = truth > 1000.0
    point_info = [{"eta": [float(v) for v in test_ds.eta[i]],
                   "truth": float(truth[i]),
                   "predictions": {k: float(v[i]) for k, v in predictions.items()},
                   "dbscan": {"set": "ignited" if ign_mask[i] else "non-ignited",
                              "type": None, "cluster": None}}
                  for i in range(len(test_ds))]
    for mask in (ign_mask, ~ign_mask):
        idx = np.nonzero(mask)[0]
        if len(idx) == 0:
            continue
        db = baselines.Dbscan(eps=args.dbscan_eps, min_pts=args.dbscan_min_pts)
        db.fit(test_ds.eta[idx])
        for local, i in enumerate(idx):
            point_info[i]["dbscan"]["type"] = str(db.point_type_[local])
            cluster = int(db.labels_[local])
            point_info[i]["dbscan"]["cluster"] = cluster if cluster >= 0 else None

    report = {
        "n_train": len(train_ds), "n_test": len(test_ds), "split_seed": seed,
        "models": {k: baselines.metrics(v, truth).as_dict()
                   for k, v in predictions.items()},
        "points": point_info,
    }
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=1)
        fh.write("\n")
    with open(out / "mae_table.csv", "w", encoding="utf-8") as fh:
        fh.write("model,MAE,MRE\n")
        for k in sorted(predictions):
            m = report["models"][k]
            fh.write(f"{k},{m['MAE']:.17g},{m['MRE']:.17g}\n")
    outputs += ["report.json", "mae_table.csv"]
    config = {"data": str(args.data), "model": str(args.model) if args.model else None,
              "baselines": args.baselines, "train_n": n_train,
              "split_seed": seed, "dbscan_eps": args.dbscan_eps,
              "dbscan_min_pts": args.dbscan_min_pts, "arch": args.arch,
              "nn_max_iters": args.nn_max_iters, "jobs": 1}
    _write_manifest(out, "eval", config, outputs)
    for k in sorted(predictions):
        m = report["models"][k]
        print(f"{k}: MAE={m['MAE']:.2f} K  MRE={m['MRE']:.4f}")
    return config


def _write_sweep_csv(path, dims, grid_eta, finals, resolution):
    d0, d1 = dims
    i0, i1 = ETA_NAMES.index(d0), ETA_NAMES.index(d1)
    v0 = sorted({float(r[i0]) for r in grid_eta})
    v1 = sorted({float(r[i1]) for r in grid_eta})
    F = np.asarray(finals).reshape(resolution, resolution)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{d0}\\{d1}," + ",".join(f"{v:.17g}" for v in v1) + "\n")
        for i, a in enumerate(v0):
            fh.write(f"{a:.17g}," + ",".join(f"{v:.17g}" for v in F[i]) + "\n")


def cmd_sweep(args) -> dict:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scn = load_scenario()
    dims = _parse_dims(args.dims)
    if len(dims) != 2:
        raise ValueError("--dims needs exactly two dimensions")
    grid_eta = sweep_grid(dims, resolution=args.resolution)
    outputs = []
    law = OracleLaw()
    if not args.skip_oracle:
        finals = [oracle_trajectory(row, scn, law).final_T for row in grid_eta]
        _write_sweep_csv(out / "sweep_oracle.csv", dims, grid_eta, finals,
                         args.resolution)
        outputs.append("sweep_oracle.csv")
    for spec in args.model or []:
        name, _, path = spec.partition("=")
        if not path:
            raise ValueError("--model expects NAME=PATH")
        with open(path, "r", encoding="utf-8") as fh:
            kind = json.load(fh).get("kind")
        if kind == "pnode":
            model = pnode.load_checkpoint(path)
            finals = _predict_final_T(model, scn, grid_eta)
        elif kind == "krr":
            finals = baselines.load_krr(path).predict(grid_eta)
        elif kind == "mlp":
            finals = baselines.load_mlp(path).predict(grid_eta)
        else:
            raise ValueError(f"unknown model kind in {path}")
        fname = f"sweep_{name}.csv"
        _write_sweep_csv(out / fname, dims, grid_eta, finals, args.resolution)
        outputs.append(fname)
    config = {"dims": list(dims), "resolution": args.resolution,
              "model": list(args.model or []), "skip_oracle": args.skip_oracle,
              "jobs": 1}
    _write_manifest(out, "sweep", config, outputs)
    print(f"wrote {len(outputs)} sweep grid(s) to {out}")
    return config


def cmd_plot(args) -> dict:
    src = Path(getattr(args, "in"))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(src, "r", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    name = src.stem + ".svg"
    if "\\" in header[0]:                      # sweep heatmap
        d0, d1 = header[0].split("\\", 1)
        values = [[float(v) for v in row[1:]] for row in rows[1:]]
        svg = heatmap_svg(values, x_label=d1, y_label=d0,
                          title=f"final T [K]: {src.stem}")
    elif header[:4] == ["t", "m", "T", "p"]:   # trajectory
        cols = {h: [float(r[i]) for r in rows[1:]] for i, h in enumerate(header)}
        t = cols["t"]
        series = {"T [K]": (t, cols["T"])}
        for h in header:
            if h.startswith("Y_"):
                series[h] = (t, [v * 1000.0 for v in cols[h]])
        svg = line_chart_svg(series, x_label="t [s]",
                             y_label="T [K] / Y x1000",
                             title=f"trajectory: {src.stem}")
    else:
        raise ValueError(f"unrecognized CSV layout in {src}")
    with open(out / name, "w", encoding="utf-8") as fh:
        fh.write(svg)
        fh.write("\n")
    config = {"in": str(src), "out_name": name}
    _write_manifest(out, "plot", config, [name])
    print(f"wrote {out / name}")
    return config


def cmd_replay(args) -> dict:
    with open(args.manifest, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    command = manifest["command"]
    config = dict(manifest["config"])
    out = Path(args.out)
    argv = [command]
    for key, value in config.items():
        if value is None or key == "out_name":
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        elif isinstance(value, list):
            if key in ("dims",):
                argv += [flag, ",".join(str(v) for v in value)]
            else:
                for v in value:
                    argv += [flag, str(v)]
        else:
            argv += [flag, str(value)]
    if command == "plot":
        argv += ["--out", str(out)]
    else:
        argv += ["--out", str(out)]
    rc = main(argv)
    if rc != 0:
        raise RuntimeError(f"replayed command failed with exit code {rc}")
    with open(out / "manifest.json", "r", encoding="utf-8") as fh:
        new_manifest = json.load(fh)
    if new_manifest["outputs"] != manifest["outputs"]:
        raise RuntimeError("replay output hashes differ from the manifest")
    print("replay verified: output hashes identical")
    return config


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ignition0d",
                                description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an oracle dataset")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--dims", type=str, default="",
                   help="comma-separated active dimensions (default: all six)")
    g.add_argument("--out", type=str, required=True)
    g.add_argument("--jobs", type=int, default=1)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train the reactor surrogate")
    t.add_argument("--data", type=str, required=True)
    t.add_argument("--arch", type=str, default="2x300",
                   help="hidden layout, e.g. 2x50")
    t.add_argument("--out", type=str, required=True)
    t.add_argument("--max-iters", type=int, default=200)
    t.add_argument("--grad-tol", type=float, default=1e-6)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--jobs", type=int, default=1)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate models on a held-out split")
    e.add_argument("--model", type=str, default=None,
                   help="pnode checkpoint to evaluate")
    e.add_argument("--data", type=str, required=True)
    e.add_argument("--baselines", type=str, default="",
                   help="comma-separated subset of: krr,nn")
    e.add_argument("--train-n", type=int, default=None)
    e.add_argument("--split-seed", type=int, default=0)
    e.add_argument("--dbscan-eps", type=float, default=0.15)
    e.add_argument("--dbscan-min-pts", type=int, default=5)
    e.add_argument("--arch", type=str, default="2x300",
                   help="hidden layout of the nn baseline")
    e.add_argument("--nn-max-iters", type=int, default=500)
    e.add_argument("--out", type=str, required=True)
    e.add_argument("--jobs", type=int, default=1)
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="final-T grids over two dimensions")
    s.add_argument("--dims", type=str, required=True)
    s.add_argument("--model", action="append", default=None,
                   metavar="NAME=PATH",
                   help="model file to sweep (repeatable)")
    s.add_argument("--resolution", type=int, default=30)
    s.add_argument("--skip-oracle", action="store_true")
    s.add_argument("--out", type=str, required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    pl = sub.add_parser("plot", help="render a CSV as a self-contained SVG")
    pl.add_argument("--in", type=str, required=True)
    pl.add_argument("--out", type=str, required=True)
    pl.set_defaults(func=cmd_plot)

    r = sub.add_parser("replay", help="rerun a command from its manifest")
    r.add_argument("--manifest", type=str, required=True)
    r.add_argument("--out", type=str, required=True)
    r.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:  # runtime failure -> exit 1 per contract
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
