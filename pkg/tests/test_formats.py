import json

import numpy as np
import pytest

from firesite import formats
from firesite.errors import ValidationError
from firesite.formats import RunConfig, config_from_dict, load_config
from firesite.geometry import PointSet


class TestConfigDefaults:
    def test_defaults_match_the_stated_parameter_set(self):
        cfg = RunConfig()
        assert cfg.sizing.beta == 0.7
        assert cfg.gamma == 0.5
        assert cfg.sizing.epsilon == 0.05
        assert cfg.sizing.max_overlap == 0.30
        assert cfg.sizing.a1 == 7.0 and cfg.sizing.a2 == 4.0
        assert cfg.sizing.r2 == 1.0
        for ea in (cfg.macro_ea, cfg.micro_ea):
            assert ea.pop_size == 300
            assert ea.generations == 500
            assert ea.crossover_prob == 0.9
            assert ea.mutation_prob == 0.005
        assert cfg.m_runs == 10
        assert cfg.high_risk_threshold == 4.0
        assert cfg.candidate_spacing_m == 200.0
        assert cfg.candidate_clearance_m == 50.0

    def test_config_hash_stable_and_sensitive(self):
        a, b = RunConfig(), RunConfig()
        assert a.config_hash() == b.config_hash()
        b.seed = 1
        assert a.config_hash() != b.config_hash()

    def test_json_and_toml_agree(self, tmp_path):
        doc = {"seed": 5, "m_runs": 2, "sizing": {"beta": 0.6},
               "macro_ea": {"pop_size": 50}}
        jpath = tmp_path / "c.json"
        jpath.write_text(json.dumps(doc))
        tpath = tmp_path / "c.toml"
        tpath.write_text(
            'seed = 5\nm_runs = 2\n[sizing]\nbeta = 0.6\n[macro_ea]\npop_size = 50\n')
        assert load_config(jpath).config_hash() == load_config(tpath).config_hash()

    def test_unknown_keys_rejected_everywhere(self):
        with pytest.raises(ValidationError, match="sizing"):
            config_from_dict({"sizing": {"betaa": 0.7}})
        with pytest.raises(ValidationError, match="micro_ea"):
            config_from_dict({"micro_ea": {"popsize": 10}})


class TestInstanceValidation:
    def test_precomputed_demand_values_accepted(self):
        doc = {"schema_version": 1,
               "demand_points": [{"id": "c0", "x": 0.0, "y": 0.0, "a": 2.5},
                                 {"id": "c1", "x": 1.0, "y": 0.0, "a": 4.0}],
               "existing_stations": []}
        inst = formats.instance_from_json(doc)
        assert inst.a is not None and inst.accidents is None
        assert np.allclose(inst.a, [2.5, 4.0])

    def test_attributes_required_when_values_missing(self):
        doc = {"schema_version": 1,
               "demand_points": [{"id": "c0", "x": 0.0, "y": 0.0}]}
        with pytest.raises(ValidationError, match="precomputed"):
            formats.instance_from_json(doc)

    def test_negative_accident_count_rejected(self):
        doc = {"schema_version": 1,
               "demand_points": [{"id": "c0", "x": 0.0, "y": 0.0,
                                  "accidents": -1, "density": 1.0}]}
        with pytest.raises(ValidationError, match="non-negative"):
            formats.instance_from_json(doc)

    def test_duplicate_section_ids_rejected(self):
        doc = {"schema_version": 1,
               "demand_points": [
                   {"id": "c0", "x": 0.0, "y": 0.0, "a": 1.0},
                   {"id": "c0", "x": 1.0, "y": 0.0, "a": 1.0}]}
        with pytest.raises(ValidationError, match="unique"):
            formats.instance_from_json(doc)


def test_geojson_carries_planar_note():
    doc = formats.points_geojson([("s0", 1.0, 2.0, "micro")])
    assert "kilometers" in doc["crs_note"]
    assert doc["features"][0]["geometry"]["coordinates"] == [1.0, 2.0]


def test_csv_round_trip_blanks_for_absent(tmp_path):
    path = tmp_path / "t.csv"
    formats.write_csv(path, ["a", "b"], [(1, None), (2, float("nan")), (3, 0.5)])
    _, rows = formats.read_csv(path)
    assert rows == [["1", ""], ["2", ""], ["3", "0.5"]]
