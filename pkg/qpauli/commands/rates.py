# qpauli/commands/rates.py

import logging

from qpauli.io import write_matrix_csv
from qpauli.kinetics import Variant, detailed_balance_check, generator, kinetic_coefficients, pme_invariance_check
from qpauli.system import Symmetry
from .base import CommandBase, add_scenario_arguments

logger = logging.getLogger("qpauli.rates")


class Command(CommandBase):
    name = "rates"
    help = "kinetic coefficients, both generators and their consistency checks"

    @classmethod
    def add_arguments(cls, parser):
        add_scenario_arguments(parser)

    def run(self, args) -> int:
        scenario = self.load_scenario(args)
        sys = scenario.build_system()
        rates = kinetic_coefficients(sys, scenario.rate_mode_for())
        logger.info("%s rates for a %d-state system", type(rates.mode).__name__, sys.dim)

        with self.state.open("rates.csv") as fh:
            write_matrix_csv(rates.w, fh)
        for variant in Variant:
            with self.state.open(f"generator_{variant.value}.csv") as fh:
                write_matrix_csv(generator(rates, variant).A, fh)

        reports = [detailed_balance_check(rates)]
        if sys.symmetry is Symmetry.NONE:
            print("[INFO] pme-invariance: skipped, system claims no symmetry")
        else:
            reports.append(pme_invariance_check(sys, rates))
        for r in reports:
            print(r.line())

        passed = all(r.passed for r in reports)
        self.state.record("rates", {
            "mode": type(rates.mode).__name__,
            "checks": {r.name: {"passed": r.passed, "max_violation": r.max_violation} for r in reports},
        })
        return 0 if passed else 1
