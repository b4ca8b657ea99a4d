# qpauli/commands/generate.py

import logging

from qpauli.io import dump_system
from qpauli.system import Symmetry, random_system
from .base import CommandBase

logger = logging.getLogger("qpauli.generate")


class Command(CommandBase):
    name = "generate"
    help = "write a seeded random system file"

    @classmethod
    def add_arguments(cls, parser):
        parser.add_argument("--n", type=int, required=True, help="number of matter/antimatter pairs")
        parser.add_argument("--symmetry", default="none", choices=[s.value for s in Symmetry])
        parser.add_argument("--lambda", dest="lam", type=float, default=0.01, help="coupling scale")
        parser.add_argument("--shells", type=int, default=1, help="distinct energy shells")
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--out", default="system.yaml", help="file name inside the output directory")

    def run(self, args) -> int:
        sys = random_system(args.n, args.symmetry, args.lam, args.shells, args.seed)
        logger.info("generated n=%d %s system (seed %d, %d shells)", args.n, sys.symmetry.name, args.seed, args.shells)
        with self.state.open(args.out) as fh:
            dump_system(sys, fh)
        self.state.record("generate", {
            "n": args.n, "symmetry": sys.symmetry.value, "lambda": sys.lam,
            "shells": args.shells, "seed": args.seed, "file": args.out,
        })
        print(f"[OK] {sys.dim}-state {sys.symmetry.name} system written to {args.out}")
        return 0
