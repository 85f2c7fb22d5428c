import json
from pathlib import Path

import numpy as np
import pytest

from ccfcompare.comparison import ComparisonConfig, run_comparison
from ccfcompare.errors import ValidationError
from ccfcompare.ingest import Dataset, Session, read_manifest
from ccfcompare.query import FactorQuery
from ccfcompare.simulate import load_scenario, write_scenario_dataset

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="module")
def region_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("region")
    return read_manifest(write_scenario_dataset(load_scenario(FIXTURES / "region_effect.json"), out))


LABELS = {
    "a": {"region": "NAc", "sex": "F", "condition": "lipid"},
    "b": {"region": "NAc", "sex": "M", "condition": "sucrose"},
    "c": {"region": "DS", "sex": "F", "condition": "combo"},
    "d": {"region": "DS", "sex": "M", "condition": "lipid"},
    "e": {"region": "NAc", "sex": "F", "condition": "PBS"},
}


@pytest.mark.parametrize("text, g1, g2", [
    ("region=NAc vs DS", ["a", "b", "e"], ["c", "d"]),
    ("condition=lipid vs rest", ["a", "d"], ["b", "c", "e"]),
    ("sex=F vs M | region=NAc", ["a", "e"], ["b"]),
    ("condition = lipid vs rest | region=DS", ["d"], ["c"]),
    ("sex=F vs M | region=NAc, condition=lipid", ["a"], []),
])
def test_query_select(text, g1, g2):
    q = FactorQuery.parse(text)
    if not g2:
        with pytest.raises(ValidationError, match="empty"):
            q.select(LABELS)
        return
    assert q.select(LABELS) == (g1, g2)


def test_query_label_round_trip():
    q = FactorQuery.parse("  sex = F vs M |region= NAc ")
    assert q.label == "sex=F vs M | region=NAc"
    assert FactorQuery.parse(q.label) == q


@pytest.mark.parametrize("text", ["region NAc vs DS", "region=NAc", "region=NAc vs DS | oops"])
def test_query_parse_errors(text):
    with pytest.raises(ValidationError):
        FactorQuery.parse(text)


def test_query_not_disjoint():
    with pytest.raises(ValidationError, match="disjoint"):
        FactorQuery.parse("region=NAc vs NAc").select(LABELS)


def test_query_unknown_factor():
    with pytest.raises(ValidationError, match="unknown factor"):
        FactorQuery.parse("diet=a vs b").select(LABELS)


def test_injected_difference_detected(region_dataset):
    rep = run_comparison(region_dataset, "region=NAc vs DS", ("velocity", "accel_signed"),
                         ComparisonConfig(B=300, seed=1))
    assert rep.n1 == rep.n2 == 12
    assert rep.p_int < 0.01 and rep.p_max < 0.01
    assert rep.f_max == max(rep.pointwise.t_values)
    assert rep.f_int <= 2.0 * rep.f_max + 1e-9
    assert 0 <= rep.p_int <= 1 and 0 <= rep.p_max <= 1


def test_univariate_and_stratified(region_dataset):
    cfg = ComparisonConfig(B=200, seed=1, R=99)
    rep = run_comparison(region_dataset, "sex=F vs M | region=NAc", ("velocity",), cfg)
    assert rep.measures == ("velocity",)
    assert rep.n1 == rep.n2 == 6
    assert rep.p_int_permutation is not None and 0 < rep.p_int_permutation <= 1
    # no sex effect was injected
    assert rep.p_int > 0.01


def test_underpowered(region_dataset):
    ds = region_dataset
    sub = type(ds)({k: v for k, v in list(ds.records.items())[:14]}, ds.factors)
    with pytest.raises(ValidationError, match="underpowered"):
        run_comparison(sub, "region=NAc vs DS", ("velocity",), ComparisonConfig(B=10))


def test_identical_selection_rejected(region_dataset):
    with pytest.raises(ValidationError, match="disjoint"):
        run_comparison(region_dataset, "region=DS vs DS", ("velocity",), ComparisonConfig(B=10))


def test_report_json_deterministic(region_dataset):
    cfg = ComparisonConfig(B=100, seed=42)
    a = run_comparison(region_dataset, "sex=F vs M", ("velocity", "accel_signed"), cfg).to_json()
    b = run_comparison(region_dataset, "sex=F vs M", ("velocity", "accel_signed"), cfg).to_json()
    assert a == b
    d = json.loads(a)
    assert d["bootstrap_B"] == 100 and d["seed"] == 42
    assert len(d["pointwise"]["t_n"]) == 41


def test_degenerate_dataset_gives_p_one(tmp_path):
    ds = read_manifest(write_scenario_dataset(load_scenario(FIXTURES / "null_flat.json"), tmp_path))
    rep = run_comparison(ds, "region=NAc vs DS", ("velocity", "accel_signed"),
                         ComparisonConfig(B=50))
    assert rep.f_int == 0.0 and rep.f_max == 0.0
    assert rep.p_max == 1.0 and rep.p_int == 1.0
    assert rep.calibration is None


def test_raw_sessions_pipeline(rng):
    records = {}
    rate = 20.0
    for k in range(12):
        v = rng.standard_normal(600)
        # dopamine follows velocity by 3 samples in one region only
        coupling = 0.8 if k < 6 else 0.0
        dop = coupling * np.roll(v, 3) + rng.standard_normal(600)
        pos = np.concatenate([[0.0], np.cumsum(v[:-1]) / rate])
        pos[[50, 51]] = np.nan
        records[f"s{k}"] = Session(f"s{k}", rate, dop, pos,
                                   {"region": "NAc" if k < 6 else "DS"})
    ds = Dataset(records, ("region",))
    cfg = ComparisonConfig(B=99, seed=3, window_last=25.0)
    rep = run_comparison(ds, "region=NAc vs DS", ("velocity",), cfg)
    assert rep.p_max < 0.05 and rep.p_int < 0.05
    assert rep.arg_max_lag == pytest.approx(-0.15)
