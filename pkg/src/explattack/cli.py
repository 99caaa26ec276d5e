"""Command-line client for the explattack service.

Every subcommand is a thin wrapper over one HTTP endpoint: it assembles a
request, posts it, and writes the response to disk.  By default the app
runs in-process (no server needed); pass --server to talk to a remote
instance started with `explattack serve`.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx

from .datasets import load_edge_list_dataset
from .gcn import NODE_TASK
from .graphs import read_edge_list


class CliError(RuntimeError):
    pass


class ServiceClient:
    """Posts to a remote server, or drives the ASGI app in-process."""

    def __init__(self, server: str | None):
        self._server = server
        self._app = None
        if server is None:
            from .service import create_app
            self._app = create_app()

    @staticmethod
    def _check(resp) -> dict:
        if resp.status_code != 200:
            try:
                detail = resp.json().get("detail", resp.text)
            except Exception:
                detail = resp.text
            raise CliError(f"request failed ({resp.status_code}): {detail}")
        return resp.json()

    def post(self, path: str, payload: dict) -> dict:
        if self._server:
            with httpx.Client(base_url=self._server, timeout=None) as client:
                return self._check(client.post(path, json=payload))

        async def _post():
            transport = httpx.ASGITransport(app=self._app)
            async with httpx.AsyncClient(transport=transport, timeout=None,
                                         base_url="http://explattack.local") as client:
                return await client.post(path, json=payload)

        import asyncio
        return self._check(asyncio.run(_post()))


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True))


def _parse_params(pairs: list[str]) -> dict:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise CliError(f"--param expects key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _dataset_spec(args) -> dict:
    if getattr(args, "manifest", None):
        return {"manifest": args.manifest}
    if not getattr(args, "dataset_kind", None):
        raise CliError("need --dataset-kind (with optional --param) or --manifest")
    return {"kind": args.dataset_kind, "seed": args.dataset_seed,
            **_parse_params(args.param)}


def _settings_from_flags(args, prefix: str, fields: list[str]) -> dict:
    out = {}
    for f in fields:
        v = getattr(args, f"{prefix}{f}", None)
        if v is not None:
            out[f.rstrip("_")] = v
    return out


_EXPLAINER_FIELDS = ["constraint_kind", "gsat_r", "learn_rate", "epochs", "k", "seed"]
_ATTACK_FIELDS = ["budget", "gamma", "beta", "sample_count", "tau", "d_min",
                  "variant", "score_epochs", "score_learn_rate", "seed",
                  "random_retries", "subgraph_hops"]
_TRAIN_FIELDS = ["layer_count", "hidden_dim", "learn_rate", "epochs",
                 "train_fraction", "seed", "optimizer"]


def _add_explainer_flags(p):
    g = p.add_argument_group("explainer")
    g.add_argument("--constraint", dest="x_constraint_kind",
                   choices=["gnnexplainer", "gsat", "surrogate"])
    g.add_argument("--gsat-r", dest="x_gsat_r", type=float)
    g.add_argument("--explainer-lr", dest="x_learn_rate", type=float)
    g.add_argument("--explainer-epochs", dest="x_epochs", type=int)
    g.add_argument("--k", dest="x_k", type=int)
    g.add_argument("--explainer-seed", dest="x_seed", type=int)


def _add_attack_flags(p):
    g = p.add_argument_group("attack")
    g.add_argument("--budget", dest="a_budget", type=int)
    g.add_argument("--gamma", dest="a_gamma", type=float)
    g.add_argument("--beta", dest="a_beta", type=float)
    g.add_argument("--sample-count", dest="a_sample_count", type=int)
    g.add_argument("--tau", dest="a_tau", type=float)
    g.add_argument("--d-min", dest="a_d_min", type=int)
    g.add_argument("--variant", dest="a_variant",
                   choices=["log-alpha", "log-dmin"])
    g.add_argument("--score-epochs", dest="a_score_epochs", type=int)
    g.add_argument("--score-lr", dest="a_score_learn_rate", type=float)
    g.add_argument("--attack-seed", dest="a_seed", type=int)
    g.add_argument("--random-retries", dest="a_random_retries", type=int)
    g.add_argument("--subgraph-hops", dest="a_subgraph_hops", type=int)


def _add_train_flags(p):
    g = p.add_argument_group("training")
    g.add_argument("--layer-count", dest="t_layer_count", type=int)
    g.add_argument("--hidden-dim", dest="t_hidden_dim", type=int)
    g.add_argument("--train-lr", dest="t_learn_rate", type=float)
    g.add_argument("--train-epochs", dest="t_epochs", type=int)
    g.add_argument("--train-fraction", dest="t_train_fraction", type=float)
    g.add_argument("--train-seed", dest="t_seed", type=int)
    g.add_argument("--optimizer", dest="t_optimizer", choices=["adam", "gd"])


def _explainer_settings(args) -> dict:
    return _settings_from_flags(args, "x_", _EXPLAINER_FIELDS)


def _attack_settings(args) -> dict:
    return _settings_from_flags(args, "a_", _ATTACK_FIELDS)


def _train_settings(args) -> dict:
    return _settings_from_flags(args, "t_", _TRAIN_FIELDS)


def _load_instance(args):
    """Resolve (graph payload dict, target, label) from manifest or file flags."""
    if args.manifest and args.instance:
        bundle = load_edge_list_dataset(args.manifest)
        matches = [i for i in bundle.instances if i.instance_id == args.instance]
        if not matches:
            raise CliError(f"instance {args.instance!r} not found in manifest")
        inst = matches[0]
        g = inst.graph
        target = inst.target
        label = (int(g.node_labels[target]) if bundle.task_kind == NODE_TASK
                 else int(g.graph_label))
    elif args.graph:
        g, _ = read_edge_list(args.graph)
        target = args.target
        if args.label is not None:
            label = args.label
        elif g.node_labels is not None:
            if target is None:
                raise CliError("--target required for node-labeled graphs")
            label = int(g.node_labels[target])
        elif g.graph_label is not None:
            label = int(g.graph_label)
        else:
            raise CliError("graph carries no labels; pass --label")
    else:
        raise CliError("need --manifest with --instance, or --graph")
    from .service.schemas import GraphPayload
    return GraphPayload.from_graph(g).model_dump(), target, label


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    client = ServiceClient(args.server)
    resp = client.post("/datasets/generate", {
        "kind": args.kind, "seed": args.seed, "params": _parse_params(args.param)})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = resp["manifest"]
    for fname, text in zip(manifest["graph_files"], resp["graph_texts"]):
        (out / fname).write_text(text)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    print(f"wrote {len(manifest['graph_files'])} graph file(s) and manifest.json "
          f"to {out}")
    return 0


def cmd_train(args) -> int:
    client = ServiceClient(args.server)
    resp = client.post("/models/train", {
        "dataset": _dataset_spec(args),
        "train": _train_settings(args),
    })
    _write_json(args.out, resp["checkpoint"])
    report = resp["report"]
    print(json.dumps(report, indent=2, sort_keys=True))
    if args.report:
        _write_json(args.report, report)
    return 0


def cmd_explain(args) -> int:
    client = ServiceClient(args.server)
    graph, target, label = _load_instance(args)
    resp = client.post("/explain", {
        "checkpoint": json.loads(Path(args.model).read_text()),
        "graph": graph, "target": target, "label": label,
        "config": _explainer_settings(args),
    })
    _write_json(args.out, resp)
    print(f"explanation with {len(resp['explanatory_edges'])} edges -> {args.out}")
    return 0


def cmd_attack(args) -> int:
    client = ServiceClient(args.server)
    graph, target, label = _load_instance(args)
    resp = client.post("/attack", {
        "checkpoint": json.loads(Path(args.model).read_text()),
        "graph": graph, "target": target, "label": label,
        "method": args.method,
        "attack": _attack_settings(args),
        "explainer": _explainer_settings(args),
    })
    _write_json(args.out, resp)
    rec = resp["record"]
    print(f"{args.method}: feasible={rec['feasible']} objective={rec['objective']} "
          f"overlap={rec['overlap_ratio']:.3f} -> {args.out}")
    return 0


def _experiment_payload(args) -> dict:
    experiment: dict = {}
    if args.config:
        experiment = json.loads(Path(args.config).read_text())
    if args.dataset_kind or args.manifest:
        experiment["dataset"] = _dataset_spec(args)
    if "dataset" not in experiment:
        raise CliError("no dataset: pass --dataset-kind/--manifest or a --config file")
    for key, settings in (("explainer", _explainer_settings(args)),
                          ("attack", _attack_settings(args)),
                          ("train", _train_settings(args))):
        if settings:
            experiment.setdefault(key, {}).update(settings)
    if args.methods:
        experiment["methods"] = args.methods.split(",")
    if args.cases is not None:
        experiment["case_count"] = args.cases
    if args.seed is not None:
        experiment["seed"] = args.seed
    if args.workers is not None:
        experiment["workers"] = args.workers
    if getattr(args, "checkpoint", None):
        experiment["checkpoint"] = args.checkpoint
    return experiment


def cmd_evaluate(args) -> int:
    client = ServiceClient(args.server)
    resp = client.post("/evaluate", {"experiment": _experiment_payload(args)})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(resp["results_csv"])
    (out / "results.json").write_text(resp["results_json"])
    (out / "timings.csv").write_text(resp["timings_csv"])
    print(resp["results_csv"], end="")
    print(f"wrote results.csv, results.json, timings.csv to {out}")
    return 0


def cmd_sweep(args) -> int:
    client = ServiceClient(args.server)
    values = [float(v) for v in args.values.split(",")]
    resp = client.post("/sweep", {
        "experiment": _experiment_payload(args),
        "parameter": args.parameter,
        "values": values,
    })
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = []
    for item in resp["items"]:
        tag = f"{args.parameter}_{item['value']:g}"
        (out / f"results_{tag}.csv").write_text(item["results_csv"])
        (out / f"results_{tag}.json").write_text(item["results_json"])
        summary.append({"value": item["value"],
                        "rows": json.loads(item["results_json"])["rows"]})
    _write_json(out / "sweep.json", {"parameter": args.parameter, "items": summary})
    print(f"wrote {len(summary)} sweep points to {out}")
    return 0


def cmd_export_dot(args) -> int:
    client = ServiceClient(args.server)
    g, _ = read_edge_list(args.graph)
    from .service.schemas import GraphPayload
    payload = {
        "graph": GraphPayload.from_graph(g).model_dump(),
        "explanatory_edges": [], "added_edges": [], "deleted_edges": [],
    }
    if args.explanation:
        expl = json.loads(Path(args.explanation).read_text())
        payload["explanatory_edges"] = expl["explanatory_edges"]
    if args.attack_record:
        rec = json.loads(Path(args.attack_record).read_text())["record"]
        payload["added_edges"] = rec["added_edges"]
        payload["deleted_edges"] = rec["deleted_edges"]
    resp = client.post("/export-dot", payload)
    Path(args.out).write_text(resp["dot"])
    print(f"wrote {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn
    from .service import create_app
    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="explattack",
                                description="GNN explanation attacks toolkit")
    p.add_argument("--server", help="base URL of a running service; "
                                    "default runs the app in-process")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a synthetic dataset")
    g.add_argument("--kind", required=True,
                   choices=["ba-house", "tree-cycle", "ba-community", "motif-graphs"])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--param", action="append",
                   help="generator parameter as key=value (repeatable)")
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_generate)

    t = sub.add_parser("train", help="train the GCN classifier")
    t.add_argument("--dataset-kind",
                   choices=["ba-house", "tree-cycle", "ba-community", "motif-graphs"])
    t.add_argument("--dataset-seed", type=int, default=0)
    t.add_argument("--param", action="append")
    t.add_argument("--manifest", help="dataset manifest.json (or its directory)")
    t.add_argument("--out", required=True, help="checkpoint path (JSON)")
    t.add_argument("--report", help="optional path for the accuracy report")
    _add_train_flags(t)
    t.set_defaults(fn=cmd_train)

    for name, fn, extra in (("explain", cmd_explain, "explainer"),
                            ("attack", cmd_attack, "attack")):
        c = sub.add_parser(name, help=f"{name} one instance")
        c.add_argument("--model", required=True)
        c.add_argument("--manifest")
        c.add_argument("--instance", help="instance id from the manifest")
        c.add_argument("--graph", help="edge-list file (alternative to --manifest)")
        c.add_argument("--target", type=int)
        c.add_argument("--label", type=int)
        c.add_argument("--out", required=True)
        _add_explainer_flags(c)
        if extra == "attack":
            c.add_argument("--method", default="deduction",
                           choices=["random", "kill-hot", "loss", "deduction"])
            _add_attack_flags(c)
        c.set_defaults(fn=fn)

    for name, fn in (("evaluate", cmd_evaluate), ("sweep", cmd_sweep)):
        e = sub.add_parser(name, help=f"run the evaluation protocol ({name})")
        e.add_argument("--config", help="experiment config JSON; flags override")
        e.add_argument("--dataset-kind",
                       choices=["ba-house", "tree-cycle", "ba-community",
                                "motif-graphs"])
        e.add_argument("--dataset-seed", type=int, default=0)
        e.add_argument("--param", action="append")
        e.add_argument("--manifest")
        e.add_argument("--checkpoint", help="model checkpoint to reuse")
        e.add_argument("--methods", help="comma-separated method list")
        e.add_argument("--cases", type=int)
        e.add_argument("--seed", type=int)
        e.add_argument("--workers", type=int)
        e.add_argument("--out", required=True)
        _add_explainer_flags(e)
        _add_attack_flags(e)
        _add_train_flags(e)
        if name == "sweep":
            e.add_argument("--parameter", required=True,
                           choices=["k", "N", "gamma", "beta", "xi"])
            e.add_argument("--values", required=True,
                           help="comma-separated parameter values")
        e.set_defaults(fn=fn)

    d = sub.add_parser("export-dot", help="render a graph to DOT")
    d.add_argument("--graph", required=True, help="edge-list file")
    d.add_argument("--explanation", help="explanation JSON (from `explain`)")
    d.add_argument("--attack-record", help="attack record JSON (from `attack`)")
    d.add_argument("--out", required=True)
    d.set_defaults(fn=cmd_export_dot)

    s = sub.add_parser("serve", help="run the HTTP service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    s.set_defaults(fn=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (CliError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
