"""Command-line client for the allocation service.

Subcommands ``solve``, ``simulate`` and ``sweep`` build a request, send it
to the HTTP service (an in-process instance by default, or a remote one
via ``--server``) and format the response; ``serve`` runs the service.
Exit codes: 0 success, 2 bad input or config, 3 solver did not converge,
1 anything unexpected.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx

from . import __version__

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO_CONVERGENCE = 3
EXIT_INTERNAL = 1

_SIMULATE_CSV_COLUMNS = ("scheme", "ee_mbit_j", "sumrate_bit_s_hz", "ptx_mw",
                         "iters_mean", "converged")


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, str)):
        return str(x)
    return f"{float(x):.9g}"


def _emit(pairs, machine: bool) -> None:
    for key, value in pairs:
        if machine:
            print(f"{key}={_fmt(value)}")
        else:
            print(f"{key:28s} {_fmt(value)}")


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    import warnings

    with warnings.catch_warnings():
        # The in-process transport is an implementation detail here; keep
        # the client's stderr clean of upstream deprecation chatter.
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .api import app

    return TestClient(app)


def _post(client: httpx.Client, path: str, payload: dict) -> dict:
    response = client.post(path, json=payload)
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        raise SystemExit(_fail(f"request rejected: {detail}", EXIT_USAGE))
    return response.json()


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise SystemExit(_fail(f"{flag} expects a comma-separated list of numbers", EXIT_USAGE))


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise SystemExit(_fail(f"config file not found: {path}", EXIT_USAGE))
    except json.JSONDecodeError as exc:
        raise SystemExit(_fail(f"config file is not valid JSON: {exc}", EXIT_USAGE))
    if not isinstance(doc, dict):
        raise SystemExit(_fail("config file must contain a JSON object", EXIT_USAGE))
    return doc


def _out_dir(arg: str) -> Path:
    out = Path(arg)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve(args) -> int:
    gains = _parse_floats(args.gains, "--gains")
    distances = _parse_floats(args.distances, "--distances")
    if len(gains) != len(distances):
        return _fail("--gains and --distances must have the same length", EXIT_USAGE)

    with _client(args.server) as client:
        body = _post(client, "/solve", {
            "gains": gains,
            "distances": distances,
            "cell_radius": args.cell_radius,
            "budget": args.budget,
            "tolerance": args.tolerance,
            "max_iterations": args.max_iterations,
        })

    pairs = [("alpha", body["alpha"])]
    for i, (zone, rho) in enumerate(zip(body["zones"], body["rho"])):
        pairs.append((f"zone_{i}", zone))
        pairs.append((f"rho_{i}", rho))
    for key in ("water_level_near", "water_level_far"):
        if body[key] is not None:
            pairs.append((key, body[key]))
    pairs += [("objective", body["objective"]),
              ("iterations", body["iterations"]),
              ("converged", body["converged"])]
    _emit(pairs, args.machine)

    return EXIT_OK if body["converged"] else EXIT_NO_CONVERGENCE


def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    if args.seed is not None:
        config["rng_seed"] = args.seed
    payload = {"config": config}
    if args.schemes:
        payload["schemes"] = args.schemes.split(",")

    with _client(args.server) as client:
        body = _post(client, "/simulate", payload)

    rows = []
    pairs = [("seed", body["seed"])]
    for rep in body["reports"]:
        scheme = rep["scheme"]
        ee_mbit = rep["energy_efficiency_bit_j"] / 1e6
        ptx_mw = rep["total_transmit_power_w"] * 1e3
        rows.append((scheme, ee_mbit, rep["sum_rate_bit_s_hz"], ptx_mw,
                     rep["mean_iterations"], rep["converged"]))
        pairs += [
            (f"{scheme}.ee_mbit_j", ee_mbit),
            (f"{scheme}.sumrate_bit_s_hz", rep["sum_rate_bit_s_hz"]),
            (f"{scheme}.ptx_mw", ptx_mw),
            (f"{scheme}.iters_mean", rep["mean_iterations"]),
            (f"{scheme}.converged", rep["converged"]),
        ]
    _emit(pairs, args.machine)

    out = _out_dir(args.out) / "simulate.csv"
    with open(out, "w", newline="\n") as fh:
        fh.write(",".join(_SIMULATE_CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")
    if not args.machine:
        print(f"wrote {out}")

    if not all(rep["converged"] for rep in body["reports"]):
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .experiments import SweepRow, rows_to_csv

    config = _load_config(args.config)
    if args.seed is not None:
        config["seed"] = args.seed
    if args.trials is not None:
        config["trials"] = args.trials
    if args.schemes:
        config["schemes"] = args.schemes.split(",")

    with _client(args.server) as client:
        body = _post(client, "/sweep", {"config": config, "workers": args.workers})

    out = _out_dir(args.out)
    variable = body["spec_echo"]["variable"]
    rows = [SweepRow(**row) for row in body["rows"]]
    csv_path = rows_to_csv(rows, out / f"sweep_{variable}.csv")
    meta_path = out / f"sweep_{variable}.meta.json"
    with open(meta_path, "w") as fh:
        json.dump({
            "version": body["version"],
            "spec": body["spec_echo"],
            "target_sum_rate": body["target_sum_rate"],
            "wall_clock_seconds": body["wall_clock_seconds"],
        }, fh, indent=2, sort_keys=True)
        fh.write("\n")

    pairs = [("rows", len(rows)), ("csv", str(csv_path)), ("metadata", str(meta_path))]
    _emit(pairs, args.machine)
    failed = [r for r in rows if r.fail_rate > 0]
    if failed:
        print(f"warning: {len(failed)} cells had convergence failures", file=sys.stderr)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .api import app

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cellwf",
        description="Zoned water-filling power allocation: solver, simulator and sweeps.",
    )
    parser.add_argument("--version", action="version", version=f"cellwf {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--server", default=None,
                       help="base URL of a running service (default: in-process)")
        p.add_argument("--machine", action="store_true",
                       help="machine-readable stdout, one key=value per line")

    p = sub.add_parser("solve", help="solve one zoned water-filling instance")
    p.add_argument("--gains", required=True, help="comma-separated SNR ratios c_z")
    p.add_argument("--distances", required=True, help="comma-separated distances, meters")
    p.add_argument("--cell-radius", type=float, required=True)
    p.add_argument("--budget", type=float, default=1.0,
                   help="coefficient budget p_transmit/p_max (default 1.0)")
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.add_argument("--max-iterations", type=int, default=100_000)
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="one seeded realization, all schemes")
    p.add_argument("--config", required=True, help="flat JSON config (powers in dBm)")
    p.add_argument("--seed", type=int, default=None, help="override rng_seed")
    p.add_argument("--schemes", default=None, help="comma-separated scheme subset")
    p.add_argument("--out", default=".", help="output directory (default .)")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="Monte Carlo sweep to CSV + metadata JSON")
    p.add_argument("--config", required=True, help="flat JSON sweep config")
    p.add_argument("--seed", type=int, default=None, help="override sweep seed")
    p.add_argument("--trials", type=int, default=None, help="override trial count")
    p.add_argument("--schemes", default=None, help="comma-separated scheme subset")
    p.add_argument("--workers", type=int, default=1, help="parallel trial workers")
    p.add_argument("--out", default=".", help="output directory (default .)")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else EXIT_INTERNAL
    except Exception as exc:  # stable nonzero exit for anything unplanned
        return _fail(f"unexpected failure: {exc}", EXIT_INTERNAL)


if __name__ == "__main__":
    sys.exit(main())
