# qpauli/commands/check.py

import logging

from qpauli.checks import run_battery
from .base import CommandBase

logger = logging.getLogger("qpauli.check")


class Command(CommandBase):
    name = "check"
    help = "property battery over seeded random systems"

    @classmethod
    def add_arguments(cls, parser):
        parser.add_argument("--systems", type=int, default=100, help="number of random systems")
        parser.add_argument("--seed", type=int, default=0, help="first seed")
        parser.add_argument("--max-n", type=int, default=4, help="largest pair count")
        parser.add_argument("--inject-asymmetry", type=float, metavar="EPS",
                            help="perturb w[-n,-n+1] by EPS to exercise the failure path")

    def run(self, args) -> int:
        if args.systems < 1 or args.max_n < 1:
            raise ValueError("--systems and --max-n must be >= 1")
        logger.info("checking %d systems from seed %d on %d workers", args.systems, args.seed, self.cfg.workers)
        report = run_battery(args.systems, args.seed, self.cfg.workers, args.max_n, args.inject_asymmetry)
        with self.state.open("check_summary.csv") as fh:
            for line in report.lines():
                fh.write(line + "\n")
        for s in report.summaries:
            status = "OK" if s.ok else "FAIL"
            print(f"[{status}] {s.line()}")
        self.state.record("check", {
            s.name: {"passed": s.passed, "total": s.total, "worst": s.worst} for s in report.summaries
        })
        return 0 if report.passed else 1
