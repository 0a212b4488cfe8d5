"""Case parsing and container round trips."""

import numpy as np
import pytest

from ugcn.caseio import (
    BUILTIN_CASES,
    decode_array,
    encode_array,
    load_case,
    load_container,
    load_dataset,
    parse_case,
    save_container,
    save_dataset,
    to_grid_graph,
)
from ugcn.errors import (
    CorruptFile,
    DanglingBranch,
    Disconnected,
    NotRadial,
    ParseError,
    SchemaVersionMismatch,
)
from ugcn.scenarios import scenario_from_payload, scenario_to_payload

MINIMAL_JSON = """
{"format": "ugcn-case", "version": 1, "name": "tiny", "base_mva": 10.0,
 "kind": "distribution", "root": 1,
 "buses": [{"id": 1}, {"id": 2, "p_mw": 0.5, "q_mvar": 0.2}],
 "branches": [{"from": 1, "to": 2, "r": 0.0, "x": 1.0}]}
"""

MINIMAL_MATPOWER = """
function mpc = tiny
mpc.baseMVA = 10;
mpc.bus = [
    1 3 0.0 0.0;
    2 1 0.5 0.2;
];
mpc.branch = [
    1 2 0.0 1.0;
];
"""


class TestParseCase:
    def test_minimal_json(self):
        case = parse_case(MINIMAL_JSON)
        assert len(case.buses) == 2
        assert len(case.branches) == 1
        assert case.branches[0].x == 1.0
        assert case.base_mva == 10.0

    def test_minimal_matpower(self):
        case = parse_case(MINIMAL_MATPOWER)
        assert len(case.buses) == 2
        assert len(case.branches) == 1
        assert case.root == 1          # type-3 bus marks the slack
        assert case.base_mva == 10.0

    def test_matpower_single_line_matrix(self):
        case = parse_case("mpc.baseMVA = 100;\nmpc.bus = [1 3 0 0; 2 1 1 1];\n"
                          "mpc.branch = [1 2 0.1 0.2];")
        assert len(case.buses) == 2

    def test_unknown_fields_warn(self):
        text = MINIMAL_JSON.replace('"name": "tiny",', '"name": "tiny", "color": "red",')
        case = parse_case(text)
        assert any("color" in w for w in case.warnings)

    def test_dangling_branch(self):
        text = MINIMAL_JSON.replace('"to": 2', '"to": 99')
        with pytest.raises(DanglingBranch) as err:
            parse_case(text)
        assert err.value.bus == 99

    def test_parse_error_has_location(self):
        with pytest.raises(ParseError) as err:
            parse_case('{"bad json": ')
        assert err.value.line is not None

    def test_parse_serialize_parse_idempotent(self):
        from ugcn.caseio import serialize_case

        for name in BUILTIN_CASES + ("minimal",):
            case = parse_case(MINIMAL_JSON) if name == "minimal" else load_case(name)
            text = serialize_case(case)
            again = parse_case(text)
            assert serialize_case(again) == text
            assert again.buses == case.buses
            assert again.branches == case.branches

    def test_builtin_cases_load(self):
        expected = {"ieee33": (33, 32), "ieee69": (69, 68), "ieee30": (30, 41), "ieee39": (39, 46)}
        for name in BUILTIN_CASES:
            case = load_case(name)
            buses, branches = expected[name]
            assert len(case.buses) == buses
            assert len(case.branches) == branches
            assert all(br.status == 1 for br in case.branches)


class TestToGridGraph:
    def test_round_trip_to_graph(self):
        g = to_grid_graph(parse_case(MINIMAL_JSON))
        assert g.n == 2
        assert g.branches[0].impedance == 1j

    def test_tie_switch_loop_rejected(self):
        import json

        raw = json.loads(load_case_text("ieee33"))
        raw["branches"].append({"from": 18, "to": 33, "r": 0.1, "x": 0.1, "status": 1})
        with pytest.raises(NotRadial):
            to_grid_graph(parse_case(json.dumps(raw)))

    def test_open_tie_switch_kept_out_of_service(self):
        import json

        raw = json.loads(load_case_text("ieee33"))
        raw["branches"].append({"from": 18, "to": 33, "r": 0.1, "x": 0.1, "status": 0})
        g = to_grid_graph(parse_case(json.dumps(raw)))
        assert len(g.branches) == 33
        assert len(g.in_service()) == 32

    def test_transmission_disconnected_rejected(self):
        text = """{"format": "ugcn-case", "version": 1, "base_mva": 100,
        "buses": [{"id": 1}, {"id": 2}, {"id": 3}, {"id": 4}],
        "branches": [{"from": 1, "to": 2, "r": 0, "x": 1},
                     {"from": 3, "to": 4, "r": 0, "x": 1}]}"""
        with pytest.raises(Disconnected):
            to_grid_graph(parse_case(text), kind="transmission")


def load_case_text(name):
    from importlib import resources

    return resources.files("ugcn.cases").joinpath(f"{name}.case.json").read_text()


class TestContainers:
    def test_json_round_trip(self, tmp_path):
        path = str(tmp_path / "x.ugcn.json")
        payload = {"kind": "dataset", "a": [1.5, 2.25], "nested": {"b": "text"}}
        save_container(path, payload)
        assert load_container(path) == payload

    def test_binary_round_trip(self, tmp_path):
        path = str(tmp_path / "x.ugcn.bin")
        payload = {"kind": "dataset", "a": list(np.linspace(0, 1, 7))}
        save_container(path, payload)
        assert load_container(path) == payload

    def test_truncated_binary_raises(self, tmp_path):
        path = str(tmp_path / "x.ugcn.bin")
        save_container(path, {"kind": "dataset", "a": [1, 2, 3]})
        blob = open(path, "rb").read()
        open(path, "wb").write(blob[:-4])
        with pytest.raises(CorruptFile):
            load_container(path)

    def test_corrupted_payload_raises(self, tmp_path):
        path = str(tmp_path / "x.ugcn.bin")
        save_container(path, {"kind": "dataset", "a": [1, 2, 3]})
        blob = bytearray(open(path, "rb").read())
        blob[-2] ^= 0xFF
        open(path, "wb").write(bytes(blob))
        with pytest.raises(CorruptFile):
            load_container(path)

    def test_version_mismatch(self, tmp_path):
        import struct
        import zlib

        path = str(tmp_path / "x.ugcn.bin")
        body = b'{"kind": "dataset"}'
        with open(path, "wb") as fh:
            fh.write(struct.pack("<4sIQI", b"UGCN", 0, len(body), zlib.crc32(body)))
            fh.write(body)
        with pytest.raises(SchemaVersionMismatch) as err:
            load_container(path)
        assert err.value.found == 0

    def test_json_version_mismatch(self, tmp_path):
        path = str(tmp_path / "x.ugcn.json")
        save_container(path, {"kind": "dataset"})
        text = open(path).read().replace('"version": 1', '"version": 0')
        open(path, "w").write(text)
        with pytest.raises(SchemaVersionMismatch):
            load_container(path)

    def test_array_codec_bit_exact(self):
        rng = np.random.default_rng(0)
        real = rng.standard_normal((3, 4))
        cplx = rng.standard_normal((2, 5)) + 1j * rng.standard_normal((2, 5))
        assert np.array_equal(decode_array(encode_array(real)), real)
        assert np.array_equal(decode_array(encode_array(cplx)), cplx)


class TestScenarioRoundTrip:
    def test_bitwise_equal_tensors(self, tmp_path, chain4):
        from ugcn.scenarios import ScenarioConfig, build_scenario

        cfg = ScenarioConfig(t_total=16, scenario="ami", seed=5, noise_sigma=0.001)
        loads = {b: 0.02 + 0.01j for b in chain4.bus_ids}
        system = build_scenario(chain4, cfg, 0, loads)
        for suffix in (".ugcn.json", ".ugcn.bin"):
            path = str(tmp_path / ("s" + suffix))
            save_dataset(path, {"systems": [scenario_to_payload(system)]})
            back = scenario_from_payload(load_dataset(path)["systems"][0])
            assert np.array_equal(back.true_states, system.true_states)
            assert np.array_equal(back.estimates, system.estimates)
            assert back.graph.bus_ids == system.graph.bus_ids
            assert back.ami_buses == system.ami_buses
