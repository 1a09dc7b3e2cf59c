"""Command-line front end.

Subcommands wrap the library one-to-one: `simulate` runs the end-to-end
authentication pipeline, `ber-sweep`/`throughput`/`detect` emit the bench
tables, `sched` analyzes a bus description, `analyze` profiles a candump
log, and `split` reports the hybrid splitting decision.

Every subcommand takes --format {human,csv}, --output, --seed, and
--config INI. Precedence is command line > config file > defaults, and a
given invocation always produces the same bytes. Exit codes: 0 on success,
2 for usage errors (argparse), 3 for unreadable or unparseable input.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
from typing import IO, Sequence

import numpy as np

from . import bench, hybrid, iat_channel, sched, timing
from .attacks import evaluate_rates
from .bits import Bits
from .pipeline import ATTACKS, CHANNELS, AttackSpec, ScenarioConfig, run_scenario, sub_seed

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3


class InputError(Exception):
    """A file we were asked to read could not be read or parsed."""


# ---------------------------------------------------------------------------
# argument helpers


def _int_any_base(text: str) -> int:
    return int(text, 0)


def _float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _int_list(text: str) -> list[int]:
    """Comma-separated ints with a-b spans: "1-3,6" -> [1, 2, 3, 6]."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:  # leading '-' would be a sign, not a span
            lo_text, hi_text = part.split("-", 1)
            lo, hi = int(lo_text), int(hi_text)
            if hi < lo:
                raise ValueError(f"empty span {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    return out


def _settings_list(text: str) -> list[tuple[int, int]]:
    """Comma-separated l1:l2 pairs: "1:1,2:1" -> [(1, 1), (2, 1)]."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        l1_text, l2_text = part.split(":", 1)
        out.append((int(l1_text), int(l2_text)))
    if not out:
        raise ValueError("no settings given")
    return out


# ---------------------------------------------------------------------------
# parser construction


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="tacan",
        description="Covert-channel transmitter authentication for periodic CAN messages.",
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    sub_map: dict[str, argparse.ArgumentParser] = {}

    def sub(name: str, help_text: str) -> argparse.ArgumentParser:
        p = subparsers.add_parser(name, help=help_text)
        # fresh actions per subparser: a parents= parser would share action
        # objects, and per-subcommand set_defaults would bleed across
        p.add_argument("--config", metavar="INI", help="config file; flags override it")
        p.add_argument("--format", choices=("human", "csv"), default="human")
        p.add_argument("--output", metavar="PATH", default="-", help="write here instead of stdout")
        p.add_argument("--seed", type=int, default=0)
        sub_map[name] = p
        return p

    p = sub("simulate", "run the full authenticate/modulate/demodulate/verify pipeline")
    p.add_argument("--channel", choices=CHANNELS, default="iat")
    p.add_argument("--period-ms", type=float, default=10.0)
    p.add_argument("--delta-frac", type=float, default=0.01, help="ITT deviation as a fraction of the period")
    p.add_argument("--window", type=int, default=4)
    p.add_argument("--frames", type=int, default=50)
    p.add_argument("--sigma-frac", type=float, default=0.0, help="receiver IAT noise sigma / period")
    p.add_argument("--skew", type=float, default=0.0)
    p.add_argument("--msg-id", type=_int_any_base, default=0x20)
    p.add_argument("--counter-bits", type=int, default=24)
    p.add_argument("--digest-bits", type=int, default=8)
    p.add_argument("--digest-mode", choices=("last-bits", "xor-bytes"), default="last-bits")
    p.add_argument("--k", type=int, default=2, help="consecutive failures before an alarm")
    p.add_argument("--lsb-bits", type=int, default=2)
    p.add_argument("--byte-index", type=int, default=0)
    p.add_argument("--frame-symbols", type=int, default=0)
    p.add_argument("--attack", choices=("none",) + ATTACKS, default="none")
    p.add_argument("--attack-start-s", type=float, default=5.0)
    p.add_argument("--attack-duration-s", type=float, default=0.0)
    p.add_argument("--inject-period-ms", type=float, default=1.0)
    p.add_argument("--attack-seed", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub("ber-sweep", "Monte-Carlo bit error rates against the analytic law")
    p.add_argument("--sigma-fracs", type=_float_list, default=[0.005, 0.011, 0.027])
    p.add_argument("--windows", type=_int_list, default=list(range(1, 9)), help='e.g. "1-8" or "1,3,5"')
    p.add_argument("--delta-frac", type=float, default=0.01)
    p.add_argument("--bits", type=int, default=100_000, help="bits per grid cell")
    p.add_argument("--period-ms", type=float, default=10.0)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_ber_sweep)

    p = sub("throughput", "channel and authentication throughput per (l1, l2) setting")
    p.add_argument("--period-ms", type=float, default=10.0)
    p.add_argument("--n-m", type=int, default=32, help="authentication message bits")
    p.add_argument("--n-o", type=int, default=16, help="frame overhead bits")
    p.add_argument("--frames", type=int, default=1000)
    p.add_argument("--settings", type=_settings_list, default=list(bench.DEFAULT_SETTINGS))
    p.set_defaults(func=cmd_throughput, seed=bench.DEFAULT_SAMPLE_SEED)

    p = sub("sched", "worst-case response times for a bus description CSV")
    p.add_argument("--input", required=True, metavar="BUS_CSV")
    p.add_argument("--bit-time-us", type=float, default=2.0)
    p.add_argument("--tacan-frac", type=float, default=0.0, help="ITT deviation fraction f = delta/T")
    p.set_defaults(func=cmd_sched)

    p = sub("detect", "false-alarm table, or detection rates under an attack")
    p.add_argument("--mode", choices=("fa", "attack"), default="fa")
    p.add_argument("--k-values", type=_int_list, default=[1, 2, 3])
    p.add_argument("--frames", type=int, default=1000)
    p.add_argument("--delta-frac", type=float, default=0.02)
    p.add_argument("--target-ber", type=float, default=1e-7)
    p.add_argument("--attack", choices=ATTACKS, default="suspension")
    p.add_argument("--runs", type=int, default=20, help="attack mode: sessions per label")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--period-ms", type=float, default=10.0)
    p.add_argument("--window", type=int, default=4)
    p.add_argument("--sigma-frac", type=float, default=0.011)
    p.add_argument("--attack-start-s", type=float, default=5.0)
    p.add_argument("--attack-duration-s", type=float, default=0.0)
    p.set_defaults(func=cmd_detect)

    p = sub("analyze", "per-message IAT statistics from a candump log")
    p.add_argument("--input", required=True, metavar="CANDUMP_LOG")
    p.add_argument("--delta-frac", type=float, default=0.01)
    p.add_argument("--target-ber", type=float, default=0.01)
    p.add_argument("--msg-id", type=_int_any_base, default=None, help="only this ID")
    p.set_defaults(func=cmd_analyze)

    p = sub("split", "hybrid-channel splitting decision for one message")
    p.add_argument("--l1", type=int, default=1)
    p.add_argument("--l2", type=int, default=1)
    p.add_argument("--n-m", type=int, default=32)
    p.add_argument("--n-o", type=int, default=16)
    p.add_argument("--period-ms", type=float, default=10.0)
    p.add_argument("--message", metavar="HEX", default=None, help="message bits as hex (width n-m)")
    p.set_defaults(func=cmd_split)

    return parser, sub_map


# ---------------------------------------------------------------------------
# config file layering


def _find_config_path(argv: Sequence[str]) -> str | None:
    for i, arg in enumerate(argv):
        if arg == "--config":
            return argv[i + 1] if i + 1 < len(argv) else None
        if arg.startswith("--config="):
            return arg.split("=", 1)[1]
    return None


def _apply_config_file(path: str, section: str, subparser: argparse.ArgumentParser) -> None:
    """Turn one INI section into subparser defaults (flags still win)."""
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise InputError(f"cannot parse config {path}: {exc}") from exc
    if not cp.has_section(section):
        return
    actions = {
        a.dest: a
        for a in subparser._actions
        if a.option_strings and a.dest not in ("help", "config")
    }
    for key, raw in cp.items(section):
        dest = key.replace("-", "_")
        action = actions.get(dest)
        if action is None:
            raise InputError(f"config {path}: unknown key {key!r} in [{section}]")
        try:
            if action.nargs == 0:  # boolean flag
                value: object = cp.getboolean(section, key)
            elif action.type is not None:
                value = action.type(raw)
            else:
                value = raw
            if action.choices is not None and value not in action.choices:
                raise ValueError(f"must be one of {sorted(action.choices)}")
        except (TypeError, ValueError) as exc:
            raise InputError(f"config {path}: bad value for {key!r}: {exc}") from exc
        subparser.set_defaults(**{dest: value})


# ---------------------------------------------------------------------------
# output helpers


def _emit_metadata(fh: IO[str], metadata: dict) -> None:
    for key, value in metadata.items():
        fh.write(f"# {key}={bench._format_value(value)}\n")


def _human_table(fh: IO[str], header: Sequence[str], rows: Sequence[Sequence]) -> None:
    cells = [[str(h) for h in header]] + [
        [bench._format_value(v) for v in row] for row in rows
    ]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    for r, row in enumerate(cells):
        fh.write("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip() + "\n")
        if r == 0:
            fh.write("  ".join("-" * w for w in widths) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args: argparse.Namespace, fh: IO[str]) -> int:
    cfg = ScenarioConfig(
        channel=args.channel,
        period=args.period_ms * 1e-3,
        delta_frac=args.delta_frac,
        window=args.window,
        frames=args.frames,
        sigma_frac=args.sigma_frac,
        skew=args.skew,
        msg_id=args.msg_id,
        counter_bits=args.counter_bits,
        digest_bits=args.digest_bits,
        digest_mode=args.digest_mode,
        k_threshold=args.k,
        seed=args.seed,
        lsb_bits=args.lsb_bits,
        byte_index=args.byte_index,
        frame_symbols=args.frame_symbols,
    )
    attack = None
    if args.attack != "none":
        attack = AttackSpec(
            kind=args.attack,
            start_s=args.attack_start_s,
            duration_s=args.attack_duration_s,
            inject_period=args.inject_period_ms * 1e-3,
            seed=args.attack_seed,
        )
    outcome = run_scenario(cfg, attack)

    metadata = {
        "table": "simulate",
        "channel": cfg.channel,
        "period_s": cfg.period,
        "delta_frac": cfg.delta_frac,
        "window": cfg.window,
        "frames": cfg.frames,
        "sigma_frac": cfg.sigma_frac,
        "skew": cfg.skew,
        "msg_id": f"0x{cfg.msg_id:03X}",
        "counter_bits": cfg.counter_bits,
        "digest_bits": cfg.digest_bits,
        "digest_mode": cfg.digest_mode,
        "k": cfg.k_threshold,
        "seed": cfg.seed,
        "attack": args.attack,
    }
    if attack is not None:
        metadata.update(
            {
                "attack_start_s": attack.start_s,
                "attack_duration_s": attack.duration_s,
                "attack_seed": attack.seed,
            }
        )
    metadata.update(
        {
            "ok": outcome.n_ok,
            "reception_failures": outcome.n_reception_failures,
            "verification_failures": outcome.n_verification_failures,
            "alarms": len(outcome.alarms),
        }
    )
    alarm_frames = {index for index, _ in outcome.alarms}
    rows = [
        (i, result.kind, result.detail or "", int(i in alarm_frames))
        for i, result in enumerate(outcome.results)
    ]
    _emit_metadata(fh, metadata)
    if args.format == "csv":
        bench.write_csv_table(fh, {}, ("frame", "result", "detail", "alarm"), rows)
    else:
        _human_table(fh, ("frame", "result", "detail", "alarm"), rows)
        fh.write(
            f"verified {outcome.n_ok}/{cfg.frames}, "
            f"reception failures {outcome.n_reception_failures}, "
            f"verification failures {outcome.n_verification_failures}, "
            f"alarms {len(outcome.alarms)}\n"
        )
    return EXIT_OK


def cmd_ber_sweep(args: argparse.Namespace, fh: IO[str]) -> int:
    cells = bench.ber_sweep(
        args.sigma_fracs,
        args.windows,
        delta_frac=args.delta_frac,
        bits_per_point=args.bits,
        seed=args.seed,
        period=args.period_ms * 1e-3,
        workers=args.workers,
    )
    metadata = {
        "table": "ber-sweep",
        "delta_frac": args.delta_frac,
        "bits_per_point": args.bits,
        "period_s": args.period_ms * 1e-3,
        "seed": args.seed,
    }
    if args.format == "csv":
        bench.write_ber_csv(fh, cells, metadata)
    else:
        _emit_metadata(fh, metadata)
        rows = [
            (c.sigma_frac, c.window, f"{c.analytic:.3e}", f"{c.empirical:.3e}", f"{c.std_err:.3e}")
            for c in cells
        ]
        _human_table(fh, ("sigma/T", "L", "analytic", "empirical", "std_err"), rows)
    return EXIT_OK


def cmd_throughput(args: argparse.Namespace, fh: IO[str]) -> int:
    rows = bench.throughput_table(
        period=args.period_ms * 1e-3,
        n_m=args.n_m,
        n_o=args.n_o,
        n_frames=args.frames,
        seed=args.seed,
        settings=args.settings,
    )
    metadata = {
        "table": "throughput",
        "period_s": args.period_ms * 1e-3,
        "n_m": args.n_m,
        "n_o": args.n_o,
        "frames": args.frames,
        "seed": args.seed,
    }
    if args.format == "csv":
        bench.write_throughput_csv(fh, rows, metadata)
    else:
        _emit_metadata(fh, metadata)
        table = [
            (r.channel, r.settings["l1"], r.settings["l2"], f"{r.r_c:.1f}", f"{r.r_a:.1f}")
            for r in rows
        ]
        _human_table(fh, ("channel", "l1", "l2", "Rc_bps", "Ra_bps"), table)
    return EXIT_OK


def cmd_sched(args: argparse.Namespace, fh: IO[str]) -> int:
    try:
        with open(args.input) as bus_fh:
            bus = sched.read_bus_csv(bus_fh, bit_time=args.bit_time_us * 1e-6)
    except OSError as exc:
        raise InputError(f"cannot read bus file {args.input}: {exc}") from exc
    except (ValueError, KeyError) as exc:
        raise InputError(f"cannot parse bus file {args.input}: {exc}") from exc
    ok, reports = sched.bus_schedulable(bus, deviation_frac=args.tacan_frac)
    metadata = {
        "table": "sched",
        "input": args.input,
        "bit_time_us": args.bit_time_us,
        "tacan_frac": args.tacan_frac,
        "schedulable": int(ok),
        "seed": args.seed,
    }
    _emit_metadata(fh, metadata)
    if args.format == "csv":
        sched.write_report_csv(reports, fh)
    else:
        rows = [
            (
                f"0x{r.msg_id:03X}",
                r.priority,
                f"{r.transmission * 1e6:.2f}",
                f"{r.blocking * 1e6:.2f}",
                f"{r.jitter * 1e6:.2f}",
                f"{r.response * 1e6:.2f}",
                "yes" if r.schedulable else "NO",
            )
            for r in reports
        ]
        _human_table(
            fh,
            ("id", "prio", "C_us", "B_us", "J_us", "R_us", "deadline met"),
            rows,
        )
        fh.write(f"bus schedulable: {'yes' if ok else 'no'}\n")
    return EXIT_OK


def cmd_detect(args: argparse.Namespace, fh: IO[str]) -> int:
    if args.mode == "fa":
        rows = bench.fa_table(
            k_values=args.k_values,
            frames=args.frames,
            seed=args.seed,
            delta_frac=args.delta_frac,
            bit_error_target=args.target_ber,
        )
        metadata = {
            "table": "false-alarm",
            "frames": args.frames,
            "delta_frac": args.delta_frac,
            "target_ber": args.target_ber,
            "seed": args.seed,
        }
        if args.format == "csv":
            bench.write_fa_csv(fh, rows, metadata)
        else:
            _emit_metadata(fh, metadata)
            table = [
                (f"0x{r.msg_id:03X}", r.period, r.window, r.k, f"{100 * r.p_fa:.2f}%")
                for r in rows
            ]
            _human_table(fh, ("msg_id", "period_s", "L", "K", "P_FA"), table)
        return EXIT_OK

    # attack mode: equal numbers of benign and attacked sessions
    runs = []
    for i in range(args.runs):
        benign_cfg = ScenarioConfig(
            channel="iat",
            period=args.period_ms * 1e-3,
            delta_frac=args.delta_frac,
            window=args.window,
            frames=args.frames,
            sigma_frac=args.sigma_frac,
            k_threshold=args.k,
            seed=sub_seed(args.seed, 2 * i),
        )
        runs.append((False, run_scenario(benign_cfg).results))
        attack_cfg = ScenarioConfig(
            channel="iat",
            period=args.period_ms * 1e-3,
            delta_frac=args.delta_frac,
            window=args.window,
            frames=args.frames,
            sigma_frac=args.sigma_frac,
            k_threshold=args.k,
            seed=sub_seed(args.seed, 2 * i + 1),
        )
        attack = AttackSpec(
            kind=args.attack,
            start_s=args.attack_start_s,
            duration_s=args.attack_duration_s,
            seed=sub_seed(args.seed, 10_000 + i),
        )
        runs.append((True, run_scenario(attack_cfg, attack).results))
    p_fa, p_d = evaluate_rates(runs, args.k)
    metadata = {
        "table": "detect",
        "attack": args.attack,
        "runs_per_label": args.runs,
        "frames": args.frames,
        "k": args.k,
        "delta_frac": args.delta_frac,
        "sigma_frac": args.sigma_frac,
        "attack_start_s": args.attack_start_s,
        "seed": args.seed,
    }
    if args.format == "csv":
        bench.write_csv_table(
            fh, metadata, ("attack", "k", "runs_per_label", "p_fa", "p_d"),
            [(args.attack, args.k, args.runs, p_fa, p_d)],
        )
    else:
        _emit_metadata(fh, metadata)
        fh.write(f"false alarm rate {100 * p_fa:.2f}%, detection rate {100 * p_d:.2f}%\n")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace, fh: IO[str]) -> int:
    try:
        with open(args.input) as log_fh:
            log = timing.parse_candump(log_fh)
    except OSError as exc:
        raise InputError(f"cannot read candump log {args.input}: {exc}") from exc
    if not log.traces:
        raise InputError(
            f"candump log {args.input}: no parseable records"
            + (f" ({len(log.errors)} malformed lines)" if log.errors else "")
        )
    rows = []
    for msg_id in sorted(log.traces):
        if args.msg_id is not None and msg_id != args.msg_id:
            continue
        trace = log.traces[msg_id]
        if len(trace) < 3:
            continue  # nothing to profile
        values = timing.iats(trace)
        period_est = float(np.median(values))
        try:
            stats = timing.robust_sigma(values, period_est)
        except ValueError:
            continue
        sigma_frac = stats.sigma / period_est if period_est > 0 else 0.0
        l_min = iat_channel.min_window(
            args.delta_frac * period_est, 0.0, stats.sigma, args.target_ber
        )
        rows.append(
            (
                f"0x{msg_id:03X}",
                len(trace),
                period_est,
                stats.mean,
                stats.sigma,
                sigma_frac,
                stats.n_used,
                l_min,
            )
        )
    metadata = {
        "table": "analyze",
        "input": args.input,
        "delta_frac": args.delta_frac,
        "target_ber": args.target_ber,
        "malformed_lines": len(log.errors),
        "seed": args.seed,
    }
    header = (
        "msg_id",
        "frames",
        "period_est_s",
        "mean_iat_s",
        "sigma_s",
        "sigma_frac",
        "n_used",
        "l_min",
    )
    if args.format == "csv":
        bench.write_csv_table(fh, metadata, header, rows)
    else:
        _emit_metadata(fh, metadata)
        _human_table(fh, header, rows)
    return EXIT_OK


def cmd_split(args: argparse.Namespace, fh: IO[str]) -> int:
    cfg = hybrid.HybridConfig(
        iat_window=args.l1, lsb_bits=args.l2, message_bits=args.n_m, overhead_bits=args.n_o
    )
    if args.message is not None:
        try:
            value = int(args.message, 16)
        except ValueError as exc:
            raise InputError(f"--message must be hex: {exc}") from exc
        if value >= 1 << args.n_m:
            raise InputError(f"--message wider than n-m={args.n_m} bits")
        message = Bits.from_int(value, args.n_m)
    else:
        message = bench.sample_auth_messages(1, args.n_m - 8, 8, args.seed)[0]
    period = args.period_ms * 1e-3
    alpha = hybrid.splitting_ratio(cfg)
    nominal_cut = math.ceil(alpha * cfg.message_bits)
    refined_cut = hybrid.refine_split(message, cfg)
    slots_iat, slots_lsb = hybrid.part_slots(message, refined_cut, cfg)
    metadata = {
        "table": "split",
        "l1": args.l1,
        "l2": args.l2,
        "n_m": args.n_m,
        "n_o": args.n_o,
        "period_s": period,
        "message": str(message),
        "seed": args.seed,
    }
    row = (
        args.l1,
        args.l2,
        alpha,
        nominal_cut,
        refined_cut,
        slots_iat,
        slots_lsb,
        hybrid.measured_duration(message, cfg, period, refined_cut),
        hybrid.hybrid_duration(cfg, period),
    )
    header = (
        "l1",
        "l2",
        "alpha",
        "cut_nominal",
        "cut_refined",
        "slots_iat",
        "slots_lsb",
        "duration_s",
        "duration_nominal_s",
    )
    if args.format == "csv":
        bench.write_csv_table(fh, metadata, header, [row])
    else:
        _emit_metadata(fh, metadata)
        _human_table(fh, header, [row])
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, sub_map = build_parser()

    config_path = _find_config_path(argv)
    subcommand = next((a for a in argv if a in sub_map), None)
    if config_path is not None and subcommand is not None:
        try:
            _apply_config_file(config_path, subcommand, sub_map[subcommand])
        except InputError as exc:
            print(f"tacan: {exc}", file=sys.stderr)
            return EXIT_INPUT

    args = parser.parse_args(argv)

    if args.output and args.output != "-":
        try:
            fh = open(args.output, "w", newline="")
        except OSError as exc:
            print(f"tacan: cannot write {args.output}: {exc}", file=sys.stderr)
            return EXIT_INPUT
    else:
        fh = sys.stdout

    try:
        return args.func(args, fh)
    except InputError as exc:
        print(f"tacan: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        # invalid parameter combinations surface as usage errors
        print(f"tacan: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        if fh is not sys.stdout:
            fh.close()


if __name__ == "__main__":
    sys.exit(main())
