import json
import math

import pytest
from hypothesis import given, strategies as st

from scrp.device_model import (
    GHZ, MHZ, US, Coupling, DeviceConfig, DeviceConfigError, TransmonParams,
    device_from_dict, device_to_dict, dump_device_config, load_device_config, paper_device, paper_triplet,
)


def _cfg(**over):
    tr = {"frequency_ghz": 5.05517, "anharmonicity_mhz": -340.0, "t1_us": 100.0, "t2_us": 80.0}
    tr.update(over)
    return {"transmons": [tr]}


def test_three_transmon_config():
    doc = {
        "transmons": [
            {"frequency_ghz": f, "anharmonicity_mhz": -340.0} for f in (5.05517, 5.20360, 5.16698)
        ],
        "couplings": [{"pair": [0, 1], "strength_mhz": 2.0}, {"pair": [2, 1], "strength_mhz": 2.0}],
    }
    dev = load_device_config(json.dumps(doc))
    assert dev.n == 3
    assert dev.transmons[1].frequency == pytest.approx(2 * math.pi * 5.20360e9, rel=1e-14)
    assert dev.transmons[0].anharmonicity == pytest.approx(-2 * math.pi * 340e6, rel=1e-14)
    assert dev.coupling(1, 2) == pytest.approx(2 * MHZ)


def test_t2_above_twice_t1_rejected():
    with pytest.raises(DeviceConfigError, match="t2"):
        device_from_dict(_cfg(t1_us=50.0, t2_us=150.0))


def test_error_names_field_path():
    with pytest.raises(DeviceConfigError) as exc:
        device_from_dict({"transmons": [{"frequency_ghz": 5.0}]})
    assert exc.value.path == "transmons[0].anharmonicity_mhz"


@pytest.mark.parametrize("bad", [{"frequency_ghz": -1.0}, {"anharmonicity_mhz": 0.0}, {"t1_us": 0.0}, {"levels": 1}])
def test_invalid_transmon_fields(bad):
    with pytest.raises(DeviceConfigError):
        device_from_dict(_cfg(**bad))


def test_malformed_text():
    with pytest.raises(DeviceConfigError, match="parse"):
        load_device_config("{not json")


def test_empty_couplings_valid():
    dev = device_from_dict({**_cfg(), "couplings": []})
    assert dev.couplings == ()


@pytest.mark.parametrize("pair", [(0, 0), (0, 5)])
def test_bad_coupling_pairs(pair):
    t = TransmonParams(5 * GHZ, -340 * MHZ)
    with pytest.raises(DeviceConfigError):
        DeviceConfig([t, t], [Coupling(pair, 1.0)])


def test_duplicate_coupling_rejected():
    t = TransmonParams(5 * GHZ, -340 * MHZ)
    with pytest.raises(DeviceConfigError, match="duplicate"):
        DeviceConfig([t, t], [Coupling((0, 1), 1.0), Coupling((1, 0), 1.0)])


def test_paper_device_values():
    dev = paper_device()
    assert dev.transmons[dev.index("S")].frequency == pytest.approx(2 * math.pi * 5.05517e9, rel=1e-14)
    assert dev.transmons[dev.index("c1")].t1 == pytest.approx(122.7 * US)
    assert dev.transmons[dev.index("F2")].t2 == pytest.approx(170.3 * US)
    assert len(dev.couplings) == 6
    assert all(t.anharmonicity == pytest.approx(-340 * MHZ) for t in dev.transmons)
    dev.check_triplet(dev.index("c1"), dev.index("t"), dev.index("c2"))


def test_paper_triplet_order():
    tri = paper_triplet()
    assert [t.label for t in tri.transmons] == ["F1", "S", "F2"]
    assert tri.roles == {"S": 1, "F1": 0, "F2": 2, "c1": 0, "t": 1, "c2": 2}
    assert tri.is_coupled(0, 1) and tri.is_coupled(1, 2) and not tri.is_coupled(0, 2)


def test_triplet_topology_checks():
    dev = paper_device()
    with pytest.raises(DeviceConfigError):
        dev.check_triplet(0, 3, 5)  # D1 is not coupled to S
    with pytest.raises(DeviceConfigError):
        dev.check_triplet(1, 1, 5)


def test_round_trip_paper_device():
    dev = paper_device()
    assert load_device_config(dump_device_config(dev)) == dev


@given(
    f=st.floats(3.0, 8.0), a=st.floats(-500.0, -50.0), t1=st.floats(1.0, 500.0),
    ratio=st.floats(0.01, 2.0), levels=st.integers(2, 5),
)
def test_round_trip_property(f, a, t1, ratio, levels):
    doc = _cfg(frequency_ghz=f, anharmonicity_mhz=a, t1_us=t1, t2_us=t1 * ratio, levels=levels)
    dev = device_from_dict(doc)
    again = device_from_dict(json.loads(json.dumps(device_to_dict(dev))))
    for x, y in zip(dev.transmons, again.transmons):
        assert x.frequency == pytest.approx(y.frequency, rel=1e-13)
        assert x.t2 == pytest.approx(y.t2, rel=1e-13)
        assert x.levels == y.levels


@given(st.floats(1.0, 10.0))
def test_unit_conversion_precision(f):
    dev = device_from_dict(_cfg(frequency_ghz=f))
    assert abs(dev.transmons[0].frequency - 2 * math.pi * f * 1e9) <= 1e-12 * dev.transmons[0].frequency
