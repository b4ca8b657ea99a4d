# qpauli/commands/evolve.py

import logging

import numpy as np

from qpauli.io import write_trajectory_csv
from qpauli.kinetics import generator, kinetic_coefficients
from qpauli.scenario import ScenarioError
from qpauli.solver import integrate, two_state_boundary_time, two_state_generator, two_state_solution
from .base import CommandBase, add_scenario_arguments

logger = logging.getLogger("qpauli.evolve")


def analytic_deviation(traj, p0, w: float, variant, t0: float) -> float:
    """max |p_RK4 - p_closed_form| over the samples of a constant-rate two-state run."""
    exact = np.array([two_state_solution(p0, w, variant, t, t0) for t in traj.t])
    return float(np.abs(traj.p - exact).max())


class Command(CommandBase):
    name = "evolve"
    help = "integrate the master equations and write trajectory CSVs"

    @classmethod
    def add_arguments(cls, parser):
        add_scenario_arguments(parser)
        parser.add_argument("--t0", type=float)
        parser.add_argument("--t1", type=float)
        parser.add_argument("--step", type=float, help="RK4 step (default 1e-3/max|A|)")
        parser.add_argument("--sample-every", type=int, help="write every k-th step")
        parser.add_argument("--backward", action="store_true", default=None,
                            help="integrate from t0 toward earlier times")
        parser.add_argument("--two-state-rate", type=float, metavar="W",
                            help="skip the system file: two states coupled by the constant rate W")
        parser.add_argument("--twostate-analytic", action="store_true",
                            help="report the deviation from the two-state closed form")

    def run(self, args) -> int:
        scenario = self.load_scenario(
            args, t0=args.t0, t1=args.t1, step=args.step,
            sample_every=args.sample_every, backward=args.backward,
        )
        if args.two_state_rate is not None:
            if not args.two_state_rate >= 0.0:
                raise ScenarioError("must be nonnegative", "two-state-rate")
            n, energies, rates = 1, (0.0, 0.0), None
            w12 = args.two_state_rate
        else:
            sys = scenario.build_system()
            rates = kinetic_coefficients(sys, scenario.rate_mode_for())
            n, energies = sys.n, sys.energies
            w12 = float(rates.w[0, 1]) if n == 1 else None
        if args.twostate_analytic and n != 1:
            raise ScenarioError("--twostate-analytic needs a two-state system", "system")

        p0 = scenario.initial_state(n)
        start, end = scenario.time_span()
        summary = {}
        for variant in scenario.variants:
            gen = two_state_generator(w12, variant, energies) if rates is None else generator(rates, variant)
            traj = integrate(gen, p0, start, end, scenario.step, sample_every=scenario.sample_every)
            logger.info("%s: %d samples from t=%g to t=%g", variant.name, len(traj.samples), start, traj.final.t)
            name = f"trajectory_{variant.value}.csv"
            with self.state.open(name) as fh:
                write_trajectory_csv(traj, fh, n)

            entry = {"file": name, "samples": len(traj.samples), "final_t": traj.final.t,
                     "max_drift": traj.max_drift(), "events": []}
            for ev in traj.events:
                print(f"[INFO] {variant.name}: {ev.kind.value} at t={ev.t_event:.12g} (state {ev.state:+d})")
                entry["events"].append({"kind": ev.kind.value, "t": ev.t_event, "state": ev.state})
            if args.twostate_analytic:
                dev = analytic_deviation(traj, p0, w12, variant, start)
                print(f"[INFO] {variant.name}: two-state analytic max deviation {dev:.3e}")
                entry["analytic_max_deviation"] = dev
                t_b = two_state_boundary_time(p0, w12, variant, backward=scenario.backward)
                if t_b is not None and traj.events:
                    offset = abs(traj.events[0].t_event - start)
                    print(f"[INFO] {variant.name}: boundary offset {offset:.12g}, closed form {t_b:.12g}")
                    entry["boundary_time_error"] = abs(offset - t_b)
            print(f"[OK] {variant.name} trajectory written to {name}")
            summary[variant.value] = entry
        self.state.record("evolve", summary)
        return 0
