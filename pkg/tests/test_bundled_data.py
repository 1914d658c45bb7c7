"""The shipped data files are exactly what the generator scripts produce."""

import importlib.util
from pathlib import Path

from urbanplanner.adapters import bundled_fixture_dir
from urbanplanner.config import bundled_replay

SCRIPTS = Path(__file__).resolve().parents[1] / "scripts"


def load_script(name):
    spec = importlib.util.spec_from_file_location(name, SCRIPTS / f"{name}.py")
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def test_replay_store_is_current(tmp_path):
    out = tmp_path / "planner.jsonl"
    load_script("build_replay_store").build().save(out)
    assert out.read_bytes() == bundled_replay().read_bytes()


def test_fixtures_are_current(tmp_path):
    mod = load_script("make_fixtures")
    mod.OUT = tmp_path
    mod.main()
    shipped = bundled_fixture_dir()
    made = sorted(p.relative_to(tmp_path) for p in tmp_path.rglob("*.json"))
    assert made == sorted(p.relative_to(shipped) for p in shipped.rglob("*.json"))
    for rel in made:
        assert (tmp_path / rel).read_bytes() == (shipped / rel).read_bytes(), rel
