# qpauli/commands/simulate.py

import logging

from qpauli.io import write_diagnostics_csv, write_trajectory_csv
from qpauli.microsim import compare_to_master, lambda_sweep, master_trajectory, run_cycles
from qpauli.scenario import MicroConfig, ScenarioError
from qpauli.unitary import Propagation
from .base import CommandBase, add_scenario_arguments

logger = logging.getLogger("qpauli.simulate")

MIN_SLOPE = 1.0


def _floats(value: str) -> list[float]:
    try:
        return [float(x) for x in value.split(",")]
    except ValueError:
        raise ScenarioError(f"cannot parse '{value}'", "lambda-sweep") from None


class Command(CommandBase):
    name = "simulate"
    help = "decoherence-cycle simulation compared against the master equation"

    @classmethod
    def add_arguments(cls, parser):
        add_scenario_arguments(parser)
        parser.add_argument("--tau-d", type=float, help="decoherence interval")
        parser.add_argument("--cycles", type=int, help="number of decoherence intervals")
        parser.add_argument("--propagator", choices=[p.value for p in Propagation])
        parser.add_argument("--substeps", type=int, help="RK4 steps per interval for the master run")
        parser.add_argument("--lambda-sweep", metavar="L1,L2,...",
                            help="rerun at these couplings and fit the discrepancy exponent")
        parser.add_argument("--tolerance", type=float, default=3.0,
                            help="pass when max error <= tolerance * lambda * variation")

    def run(self, args) -> int:
        scenario = self.load_scenario(args)
        micro = scenario.microsim
        if micro is None:
            if args.tau_d is None or args.cycles is None:
                raise ScenarioError("need --tau-d and --cycles (or a microsim section)", "microsim")
            micro = MicroConfig(args.tau_d, args.cycles)
        micro = MicroConfig(
            args.tau_d if args.tau_d is not None else micro.tau_d,
            args.cycles if args.cycles is not None else micro.n_cycles,
            Propagation.parse(args.propagator) if args.propagator else micro.propagator,
            args.substeps if args.substeps is not None else micro.substeps,
        )
        scenario = scenario.with_overrides(microsim=micro)
        lams = _floats(args.lambda_sweep) if args.lambda_sweep else None

        sys = scenario.build_system()
        cfg = micro.cycle_config()
        p0 = scenario.initial_state(sys.n)
        passed = True
        summary = {}
        for variant in scenario.variants:
            result = run_cycles(sys, p0, cfg, variant)
            logger.info("%s: %d cycles at tau_d=%g", variant.name, len(result.trajectory.samples) - 1, cfg.tau_d)
            ode = master_trajectory(sys, p0, cfg, variant, micro.substeps)
            report = compare_to_master(result.trajectory, ode)
            within = report.within(sys.lam, args.tolerance)
            passed &= within

            tag = variant.value
            with self.state.open(f"micro_{tag}.csv") as fh:
                write_trajectory_csv(result.trajectory, fh, sys.n)
            with self.state.open(f"master_{tag}.csv") as fh:
                write_trajectory_csv(ode, fh, sys.n)
            with self.state.open(f"diagnostics_{tag}.csv") as fh:
                write_diagnostics_csv(result.diagnostics, fh)

            status = "OK" if within else "FAIL"
            print(
                f"[{status}] {variant.name}: max_abs_err {report.max_abs_err:.3e}, "
                f"variation {report.variation:.3e}, bound {args.tolerance:g}*lambda*variation"
            )
            entry = {"max_abs_err": report.max_abs_err, "err_at_end": report.err_at_end,
                     "variation": report.variation, "within": within}
            for ev in result.trajectory.events:
                print(f"[INFO] {variant.name} cycles: {ev.kind.value} at t={ev.t_event:.12g} (state {ev.state:+d})")

            if lams:
                reports, slope = lambda_sweep(sys, p0, cfg, variant, lams, micro.substeps)
                for lam, r in zip(lams, reports):
                    print(f"[INFO] {variant.name}: lambda={lam:g} max_abs_err {r.max_abs_err:.3e}")
                ok = slope >= MIN_SLOPE
                passed &= ok
                print(f"[{'OK' if ok else 'FAIL'}] {variant.name}: lambda scaling slope {slope:.3f}")
                entry["lambda_sweep"] = {"lambdas": lams, "errors": [r.max_abs_err for r in reports], "slope": slope}
            summary[tag] = entry
        self.state.record("simulate", summary)
        return 0 if passed else 1
