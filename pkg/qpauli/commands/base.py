import argparse

from qpauli.scenario import ScenarioConfig, ScenarioError, parse_variants


class CommandBase:
    """
    One subcommand. Modules under qpauli.commands expose a `Command`
    subclass; the CLI builds it with the shared config and state services.
    """

    name = ""
    help = ""

    def __init__(self, cfg, state):
        self.cfg = cfg
        self.state = state

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser):
        raise NotImplementedError

    def run(self, args: argparse.Namespace) -> int:
        raise NotImplementedError

    def load_scenario(self, args: argparse.Namespace, **extra) -> ScenarioConfig:
        scenario = scenario_from(args, **extra)
        if scenario.output_dir and not self.cfg.output_dir_from_flag:
            self.state.use_dir(scenario.output_dir)
        return scenario


def add_scenario_arguments(parser: argparse.ArgumentParser):
    """Flags shared by the commands that load a system and pick rates."""
    parser.add_argument("--scenario", help="scenario YAML file; flags override its values")
    parser.add_argument("--system", help="system YAML file or bundled system name")
    parser.add_argument("--mode", choices=["finite", "onshell"], help="rate mode")
    parser.add_argument("--dt", type=float, help="decoherence window for finite-window rates")
    parser.add_argument("--eta", type=float, help="on-shell energy tolerance")
    parser.add_argument("--eta-norm", type=float, help="on-shell normalization (level density)")
    parser.add_argument("--p0", help="initial probabilities: comma list, or uniform|matter|antimatter")
    parser.add_argument("--variant", help="spme, apme or both")


def parse_p0(value: str | None):
    if value is None:
        return None
    if value.strip().lower() in ("uniform", "matter", "antimatter"):
        return value.strip().lower()
    try:
        return tuple(float(x) for x in value.split(","))
    except ValueError:
        raise ScenarioError(f"cannot parse '{value}'", "p0") from None


def scenario_from(args: argparse.Namespace, **extra) -> ScenarioConfig:
    """Scenario file (if any) with the command-line flags laid over it."""
    base = ScenarioConfig.load(args.scenario) if getattr(args, "scenario", None) else ScenarioConfig()
    flags = dict(
        system=getattr(args, "system", None),
        rate_mode=getattr(args, "mode", None),
        dt=getattr(args, "dt", None),
        eta=getattr(args, "eta", None),
        eta_norm=getattr(args, "eta_norm", None),
        p0=parse_p0(getattr(args, "p0", None)),
        variants=parse_variants(args.variant) if getattr(args, "variant", None) else None,
    )
    flags.update(extra)
    return base.with_overrides(**flags)
