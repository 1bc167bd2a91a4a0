"""``qlink`` command-line front end.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 data-format error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, counts, link_budget, simulate, stellar
from .constants import ARCSEC
from .errors import ParseError, QlinkError, TimeTagFormatError, ValidationError
from .geometry import range_table, range_table_csv, time_of_flight
from .scenario import PRESETS, dumps, load_scenario, validate_scenario
from .timetag import read_timetag, write_timetag

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_DATA = 0, 2, 3, 4


class CommandError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


class Run:
    """Collects results and the manifest of written files for one command."""

    def __init__(self, command, scenario, args_for_digest, out_dir):
        self.command = command
        self.scenario = scenario
        self.out_dir = Path(out_dir)
        self.results: dict = {}
        self.manifest: list[str] = []
        self.started = time.perf_counter()
        payload = json.dumps({"command": command, "args": args_for_digest,
                              "scenario": dumps(scenario) if scenario else None},
                             sort_keys=True)
        self.digest = hashlib.sha256(payload.encode()).hexdigest()

    def _path(self, name):
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise CommandError(f"cannot create {self.out_dir}: {exc}", EXIT_IO) from exc
        return self.out_dir / name

    def write_text(self, name, text):
        path = self._path(name)
        try:
            path.write_text(text, encoding="utf-8", newline="\n")
        except OSError as exc:
            raise CommandError(f"cannot write {path}: {exc}", EXIT_IO) from exc
        self.manifest.append(str(path))
        return path

    def write_json(self, name, obj):
        return self.write_text(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def write_csv(self, name, header, rows):
        lines = [",".join(header)]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        return self.write_text(name, "\n".join(lines) + "\n")

    def write_timetag(self, name, stream):
        path = self._path(name)
        try:
            write_timetag(stream, path)
        except OSError as exc:
            raise CommandError(f"cannot write {path}: {exc}", EXIT_IO) from exc
        self.manifest.append(str(path))
        return path

    def report(self) -> dict:
        return {
            "scenario": self.scenario.name if self.scenario else None,
            "command": self.command,
            "inputs_digest": self.digest,
            "results": self.results,
            "manifest": list(self.manifest),
            "wall_time_s": time.perf_counter() - self.started,
        }


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _load(args):
    try:
        return load_scenario(args.scenario)
    except (ParseError, ValidationError) as exc:
        raise CommandError(f"{type(exc).__name__}: {exc}", EXIT_CONFIG) from exc


def _digest_args(args, keys):
    return {k: getattr(args, k) for k in keys}


# --- budget -----------------------------------------------------------------

def cmd_budget(args) -> Run:
    sc = _load(args)
    run = Run("budget", sc, _digest_args(args, ["range_m", "spreading", "sweep"]), args.out)
    tx, tgt, chain = sc.transmitter(), sc.target(), sc.optical_chain()
    rng = args.range_m if args.range_m is not None else sc["link"]["range_m"]
    spreading = args.spreading if args.spreading is not None else sc["link"]["spreading_factor"]
    try:
        up, down = sc.quoted_spots()
        res = link_budget.radar_equation(tx, tgt, chain, rng, sc.aperture_area(), spreading,
                                         uplink_spot=up, downlink_spot=down)
    except QlinkError as exc:
        raise CommandError(str(exc), EXIT_CONFIG) from exc
    body = res.to_dict()
    body["range_m"] = rng
    body["spreading_factor"] = spreading
    run.results["budget"] = body
    run.write_json(f"{sc.name}_budget.json", body)

    if args.sweep:
        if args.sweep == "range":
            ranges = rng * 2.0 ** np.arange(-2, 4)
            rows = link_budget.sweep(tx, tgt, chain, sc.aperture_area(), ranges=ranges,
                                     spreading_factor=spreading)
        else:
            divs = np.array([1, 2, 3, 5, 10, 20], dtype=float) * ARCSEC
            rows = link_budget.sweep(tx, tgt, chain, sc.aperture_area(), ranges=[rng],
                                     divergences=divs, spreading_factor=spreading)[1:]
        run.results["sweep"] = rows
        keys = ["range_m", "divergence_rad", "end_to_end", "photoelectrons"]
        run.write_csv(f"{sc.name}_sweep_{args.sweep}.csv", keys,
                      [[r[k] for k in keys] for r in rows])
    return run


def _print_budget(rep):
    b = rep["results"]["budget"]
    print(f"scenario {rep['scenario']}  range {b['range_m']:.6g} m")
    for f in b["factors"]:
        print(f"  {f['name']:<24s} {f['value']:.6g}")
    print(f"  {'end_to_end':<24s} {b['end_to_end']:.6g}")
    print(f"  {'photons_per_pulse':<24s} {b['photons_per_pulse']:.6g}")
    print(f"  {'photoelectrons':<24s} {b['photoelectrons']:.6g}")
    print(f"  step chain {b['uplink_fraction']:.4g} x {b['retro_fraction']:.4g} x "
          f"{b['downlink_fraction']:.4g} x {b['spreading_factor']:.4g} = {b['step_chain']:.4g}")
    for r in rep["results"].get("sweep", []):
        print(f"  R {r['range_m']:.4g} m  div {r['divergence_rad'] / ARCSEC:.3g}\"  "
              f"N_pe {r['photoelectrons']:.6g}")


# --- simulate ---------------------------------------------------------------

def _simulate_stream(sc, seed):
    det = sc.detector()
    if sc.kind == "pass":
        tx = sc.transmitter()
        n_pe = link_budget.photoelectrons_vs_range(
            tx, sc.target(), sc.optical_chain(), sc.aperture_area(),
            sc["link"]["spreading_factor"])
        return simulate.simulate_pass_returns(sc.pass_geometry(), n_pe, tx, det, seed,
                                              window=sc.track_window(), epoch=sc.epoch)
    if sc.kind == "ground_target":
        g = sc["ground_target"]
        return simulate.simulate_ground_target(g["distance_m"], g["instrument_offset_ns"] * 1e-9,
                                               g["rep_rate_hz"], g["n_pulses"], det, seed,
                                               epoch=sc.epoch)
    s = sc["star"]
    return simulate.simulate_star_counts(s["sim_rate_hz"], s["duration_s"], sc.scintillation(),
                                         seed, sc.modulation(), det=det, epoch=sc.epoch)


def cmd_simulate(args) -> Run:
    sc = _load(args)
    seed = args.seed if args.seed is not None else sc.seed
    run = Run("simulate", sc, {"seed": seed}, args.out)
    try:
        stream = _simulate_stream(sc, seed)
    except QlinkError as exc:
        raise CommandError(str(exc), EXIT_CONFIG) from exc
    run.write_timetag(f"{sc.name}_seed{seed}.timetag", stream)
    run.results = {"kind": sc.kind, "seed": seed, "n_events": len(stream),
                   "n_fire": stream.count("fire"), "n_return": stream.count("return"),
                   "n_background": stream.count("background")}
    if sc.kind == "pass":
        t0, t1 = sc.track_window()
        table = range_table(sc.pass_geometry(), np.arange(t0, t1 + 1e-9, 10.0))
        run.write_text(f"{sc.name}_range.csv", range_table_csv(table))
    return run


# --- analyze ----------------------------------------------------------------

def _fit_stream(stream, degree):
    obs = analysis.observations_from_stream(stream)
    if obs.shape[0] == 0:
        raise analysis.NoReturns("no fire/return pairs to fit")
    degree = min(degree, obs.shape[0] - 1)
    return obs, analysis.fit_tof_polynomial(obs, degree)


def cmd_analyze(args) -> Run:
    sc = _load(args)
    keys = ["mode", "degree", "window_ns", "bin_s"]
    run = Run("analyze", sc, _digest_args(args, keys), args.out)
    try:
        stream = read_timetag(args.timetag)
    except FileNotFoundError as exc:
        raise CommandError(f"cannot read {args.timetag}", EXIT_IO) from exc
    except OSError as exc:
        raise CommandError(f"cannot read {args.timetag}: {exc}", EXIT_IO) from exc
    except TimeTagFormatError as exc:
        raise CommandError(f"{args.timetag}: {exc}", EXIT_DATA) from exc

    an = sc["analysis"]
    degree = args.degree if args.degree is not None else an["fit_degree"]
    stem = Path(args.timetag).stem
    try:
        if args.mode in ("fit", "coincidence"):
            obs, fit = _fit_stream(stream, degree)
            resid = analysis.fit_residuals(fit, obs[:, 0], obs[:, 1])
            run.results["fit"] = {"degree": fit.degree, "n_observations": int(obs.shape[0]),
                                  "rms_residual_ns": fit.rms_residual_ns,
                                  "domain": list(fit.domain)}
            if args.mode == "fit":
                run.write_text(f"{stem}_fit.json", fit.to_json() + "\n")
                run.write_csv(f"{stem}_fit_residuals.csv", ["t_s", "tof_ns", "residual_ns"],
                              zip(obs[:, 0], obs[:, 1], resid))
            else:
                window = args.window_ns if args.window_ns is not None else an["window_ns"]
                rep = analysis.coincidence_filter(stream, fit, window)
                summary = rep.summary()
                summary["return_rate"] = analysis.return_rate(rep, max(rep.n_fires_used, 1))
                run.results["coincidence"] = summary
                run.write_json(f"{stem}_coincidence.json", summary)
                run.write_csv(f"{stem}_coincidence_residuals.csv",
                              ["timestamp_ps", "residual_ns"],
                              zip(rep.accepted.timestamps.tolist(), rep.residuals_ns))
        elif args.mode == "calibrate":
            true_tof = time_of_flight(sc["ground_target"]["distance_m"]) * 1e9
            est = analysis.estimate_instrument_offset(stream, true_tof, an["offset_bin_ns"])
            body = est.to_dict()
            body["true_tof_ns"] = true_tof
            run.results["calibration"] = body
            run.write_json(f"{stem}_calibration.json", body)
            run.write_csv(f"{stem}_offset_histogram.csv", ["bin_left_ns", "count"],
                          zip(est.bin_edges_ns[:-1], est.counts.tolist()))
        else:
            bin_s = args.bin_s if args.bin_s is not None else an["count_bin_s"]
            end = sc["star"]["duration_s"] if sc.kind == "star" else None
            series = counts.bin_events(stream, bin_s, end=end)
            pg = counts.periodogram(series)
            lines = counts.detect_lines(pg, an["snr_threshold"])
            disp = counts.dispersion_test(series)
            body = {
                "n_bins": len(series), "bin_s": bin_s, "resolution_hz": pg.resolution,
                "lines": [{"frequency_hz": ln.frequency, "power": ln.power,
                           "is_harmonic_of": ln.is_harmonic_of} for ln in lines],
                "fano_factor": disp.fano_factor, "poisson_plausible": disp.poisson_plausible,
                "fano_band": list(disp.band),
            }
            run.results["spectrum"] = body
            run.write_json(f"{stem}_lines.json", body)
            run.write_text(f"{stem}_periodogram.csv", pg.to_csv())
    except QlinkError as exc:
        raise CommandError(f"{type(exc).__name__}: {exc}", EXIT_DATA) from exc
    return run


# --- star -------------------------------------------------------------------

def cmd_star(args) -> Run:
    sc = _load(args)
    keys = ["magnitude", "observe", "poisson_only", "seed"]
    run = Run("star", sc, _digest_args(args, keys), args.out)
    mag = args.magnitude if args.magnitude is not None else sc["receiver"]["v_magnitude"]
    res = stellar.expected_count_rate(stellar.StarSpec(mag), sc.receiver_chain())
    body = res.to_dict()
    body["v_magnitude"] = mag
    run.results["star"] = body
    run.write_json(f"{sc.name}_star_m{mag:g}.json", body)
    if args.observe:
        seed = args.seed if args.seed is not None else sc.seed
        s = sc["star"]
        scint = simulate.ScintillationModel(0.0, s["correlation_time_s"]) if args.poisson_only \
            else sc.scintillation()
        mod = None if args.poisson_only else sc.modulation()
        stream = simulate.simulate_star_counts(s["sim_rate_hz"], s["duration_s"], scint, seed,
                                               mod, epoch=sc.epoch)
        series = counts.bin_events(stream, sc["analysis"]["count_bin_s"], end=s["duration_s"])
        disp = counts.dispersion_test(series)
        run.results["observe"] = {"seed": seed, "n_events": len(stream),
                                  "fano_factor": disp.fano_factor,
                                  "poisson_plausible": disp.poisson_plausible,
                                  "fano_band": list(disp.band)}
    return run


def _print_star(rep):
    s = rep["results"]["star"]
    for f in s["factors"]:
        print(f"  {f['name']:<26s} {f['value']:.6g}")
    print(f"  {'rate_per_s':<26s} {s['rate_per_s']:.6g}")
    if "observe" in rep["results"]:
        o = rep["results"]["observe"]
        print(f"  observed fano {o['fano_factor']:.4f}  band [{o['fano_band'][0]:.4f}, "
              f"{o['fano_band'][1]:.4f}]  poisson_plausible={o['poisson_plausible']}")


def cmd_presets(args) -> Run:
    run = Run("presets", None, {}, args.out)
    from .scenario import preset

    run.results["presets"] = {}
    for name in sorted(PRESETS):
        sc = preset(name)
        run.results["presets"][name] = {"kind": sc.kind,
                                        "violations": [str(v) for v in validate_scenario(sc)]}
    if args.dump:
        if args.dump not in PRESETS:
            raise CommandError(f"unknown preset {args.dump!r}", EXIT_CONFIG)
        run.write_text(f"{args.dump}.ini", dumps(preset(args.dump)))
    return run


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qlink", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario=True):
        if scenario:
            sp.add_argument("--scenario", default="lageos-mlro",
                            help="preset name, file path, or name in $QLINK_SCENARIO_DIR")
        sp.add_argument("--out", default="qlink_out", help="output directory")
        sp.add_argument("--json", action="store_true", help="print the run report as JSON")

    sp = sub.add_parser("budget", help="evaluate the link budget")
    common(sp)
    sp.add_argument("--range-m", type=float, dest="range_m")
    sp.add_argument("--spreading", type=float)
    sp.add_argument("--sweep", choices=["range", "divergence"])
    sp.set_defaults(func=cmd_budget, show=_print_budget)

    sp = sub.add_parser("simulate", help="write a synthetic time-tag file")
    common(sp)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("analyze", help="analyse a time-tag file")
    sp.add_argument("timetag")
    common(sp)
    sp.add_argument("--mode", choices=["fit", "coincidence", "calibrate", "spectrum"],
                    required=True)
    sp.add_argument("--degree", type=int)
    sp.add_argument("--window-ns", type=float, dest="window_ns")
    sp.add_argument("--bin-s", type=float, dest="bin_s")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("star", help="expected stellar count rate")
    common(sp)
    sp.add_argument("--magnitude", type=float)
    sp.add_argument("--observe", action="store_true")
    sp.add_argument("--poisson-only", action="store_true", dest="poisson_only")
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_star, show=_print_star)

    sp = sub.add_parser("presets", help="list built-in scenarios")
    common(sp, scenario=False)
    sp.add_argument("--dump", help="write the canonical file for this preset")
    sp.set_defaults(func=cmd_presets)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        run = args.func(args)
    except CommandError as exc:
        print(f"qlink {args.command}: {exc}", file=sys.stderr)
        return exc.code
    rep = run.report()
    if args.json:
        print(json.dumps(rep, indent=2, sort_keys=True))
    elif hasattr(args, "show"):
        args.show(rep)
    else:
        print(json.dumps(rep["results"], indent=2, sort_keys=True))
        for path in rep["manifest"]:
            print(f"wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
