"""Access to the bundled benchmark scenarios."""

from importlib import resources

from .sim import Scenario, load_scenario

DENSE_FIXTURES = ("traffic1", "traffic2", "traffic3", "traffic4", "traffic5", "traffic6")


def fixture_names() -> list[str]:
    root = resources.files("autorvo").joinpath("scenarios")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def fixture_text(name: str) -> str:
    return resources.files("autorvo").joinpath(f"scenarios/{name}.json").read_text()


def load_fixture(name: str) -> Scenario:
    return load_scenario(fixture_text(name))
