import pytest

from padic_incidence import Ambient, GeometryError
from padic_incidence.config import Configuration, from_families
from padic_incidence.constructions import random_config


def test_roundtrip_text():
    cfg = random_config(3, 2, 3, 10, 2)
    text = cfg.dumps()
    assert Configuration.loads(text) == cfg
    assert Configuration.loads(text).dumps() == text


def test_loads_with_comments_and_extra_tubes():
    text = """# header next
    2 2
    2^2:(1,1)   # lone cube
    2^2:[3,0]
    2^2:(0,1) -> 2^2:[0,1],2^2:[1,1]
    """
    cfg = Configuration.loads(text)
    assert len(cfg.cubes) == 2
    assert len(cfg.tubes) == 3
    assert cfg.mass() == 2
    assert cfg.multiplicity()[Ambient(2, 2).tube(0, 1)] == 1


def test_containment_enforced():
    amb = Ambient(2, 2)
    with pytest.raises(GeometryError):
        from_families(amb, {amb.cube(0, 0): [amb.tube(0, 1)]})
    with pytest.raises(GeometryError):
        Configuration(amb, (), {amb.cube(0, 0): ()})
    with pytest.raises(GeometryError):
        Configuration.loads("")
    with pytest.raises(GeometryError):
        Configuration.loads("x y\n")


def test_restrict_is_monotone():
    cfg = random_config(1, 3, 2, 15, 3)
    sub = cfg.restrict(lambda c: c.x % 2 == 0, lambda c, t: t.a != 0)
    assert set(sub.cubes) <= set(cfg.cubes)
    assert all(set(sub.assoc[c]) <= set(cfg.assoc[c]) for c in sub.cubes)
