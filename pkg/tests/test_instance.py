import io
import json
from dataclasses import fields, replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maskloop.instance import (
    DistanceOverride,
    Hospital,
    InstanceParseError,
    InstanceValidationError,
    RangeConfig,
    SplitMix64,
    dumps_instance,
    generate_synthetic,
    load_instance,
    loads_instance,
    save_instance,
    validate,
)

MASK64 = (1 << 64) - 1


def splitmix_reference(seed, n):
    # straight transcription of the public-domain C reference
    out, s = [], seed & MASK64
    for _ in range(n):
        s = (s + 0x9E3779B97F4A7C15) & MASK64
        z = s
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        out.append(z ^ (z >> 31))
    return out


def test_splitmix_known_vector():
    rng = SplitMix64(1234567)
    assert [rng.next_u64() for _ in range(5)] == [
        6457827717110365317,
        3203168211198807973,
        9817491932198370423,
        4593380528125082431,
        16408922859458223821,
    ]


@given(st.integers(min_value=0, max_value=MASK64))
def test_splitmix_matches_reference(seed):
    rng = SplitMix64(seed)
    assert [rng.next_u64() for _ in range(4)] == splitmix_reference(seed, 4)


@given(st.integers(0, 2**32), st.integers(-50, 50), st.integers(0, 50))
def test_splitmix_integer_in_range(seed, lo, width):
    rng = SplitMix64(seed)
    for _ in range(20):
        assert lo <= rng.integer(lo, lo + width) <= lo + width


def test_generator_is_pure():
    a = dumps_instance(generate_synthetic(3, 4, 5, 2))
    b = dumps_instance(generate_synthetic(3, 4, 5, 2))
    assert a == b
    assert a != dumps_instance(generate_synthetic(4, 4, 5, 2))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 6), st.integers(1, 6), st.integers(1, 3))
def test_generator_respects_ranges(seed, n_h, n_s, n_d):
    r = RangeConfig()
    inst = generate_synthetic(seed, n_h, n_s, n_d)
    assert (len(inst.hospitals), len(inst.sites), len(inst.disposal_sites)) == (n_h, n_s, n_d)
    assert validate(inst) == []
    for h in inst.hospitals:
        assert r.lat[0] <= h.lat <= r.lat[1] and r.lon[0] <= h.lon <= r.lon[1]
        assert r.usage[0] <= h.usage <= r.usage[1] and isinstance(h.usage, int)
    for s in inst.sites:
        for f in ("fixed_cost_collection", "unit_cost_reprocessing", "unit_emission_collection"):
            lo, hi = getattr(r, f)
            assert lo <= getattr(s, f) <= hi
        assert r.jobs_reprocessing[0] <= s.jobs_reprocessing <= r.jobs_reprocessing[1]
    p = inst.params
    assert r.budget[0] <= p.budget <= r.budget[1]
    for d in inst.disposal_sites:
        assert r.disposal_cost_fraction[0] * p.price - 1e-6 <= d.unit_cost <= r.disposal_cost_fraction[1] * p.price + 1e-6


def test_generator_ids_and_prefix_stability():
    inst = generate_synthetic(9, 3, 2, 1)
    assert [h.id for h in inst.hospitals] == ["H01", "H02", "H03"]
    assert [s.id for s in inst.sites] == ["S01", "S02"]
    assert inst.disposal_sites[0].id == "D01"


def test_generator_rejects_bad_arguments():
    with pytest.raises(ValueError):
        generate_synthetic(1, 0, 3)
    with pytest.raises(ValueError):
        generate_synthetic(1, 2, 2, ranges=replace(RangeConfig(), budget=(5.0, 1.0)))


def test_round_trip_exact(tmp_path):
    inst = generate_synthetic(21, 5, 4, 2)
    path = tmp_path / "inst.json"
    data = save_instance(inst, path)
    assert path.read_bytes() == data
    assert load_instance(path) == inst
    assert loads_instance(data) == inst
    assert load_instance(io.BytesIO(data)) == inst
    assert dumps_instance(load_instance(path)) == data


def test_round_trip_with_override(forced_instance):
    inst = replace(forced_instance, distance_override=DistanceOverride(((12.5,),), ((0.0,),)))
    again = loads_instance(dumps_instance(inst))
    assert again == inst
    assert again.distance_override.hospital_to_site == ((12.5,),)


def test_total_usage_and_with_params(forced_instance):
    assert forced_instance.total_usage == 10_000
    assert forced_instance.with_params(budget=0.0).params.budget == 0.0
    assert forced_instance.params.budget == 5000.0


@pytest.mark.parametrize(
    "mutate, path",
    [
        (lambda d: d["hospitals"][0].update(usage=-1), "hospitals[0].usage"),
        (lambda d: d["hospitals"][1].update(lat=91.0), "hospitals[1].lat"),
        (lambda d: d["sites"][0].update(lon=-200.0), "sites[0].lon"),
        (lambda d: d["sites"][1].update(jobs_collection=2.5), "sites[1].jobs_collection"),
        (lambda d: d["sites"][0].update(fixed_cost_collection=float("inf")), "sites[0].fixed_cost_collection"),
        (lambda d: d["params"].update(alpha=1.2), "params.alpha"),
        (lambda d: d["params"].update(beta=-0.1), "params.beta"),
        (lambda d: d["params"].update(budget=-5), "params.budget"),
        (lambda d: d["disposal_sites"][0].update(unit_cost=-0.1), "disposal_sites[0].unit_cost"),
        (lambda d: d["sites"][1].update(id=d["sites"][0]["id"]), "sites[1].id"),
        (lambda d: d.update(disposal_sites=[]), "disposal_sites"),
    ],
)
def test_validation_reports_field_paths(mutate, path):
    doc = json.loads(dumps_instance(generate_synthetic(2, 2, 2, 1)))
    mutate(doc)
    with pytest.raises(InstanceValidationError) as err:
        loads_instance(json.dumps(doc))
    assert path in [v.path for v in err.value.violations]


def test_duplicate_id_names_both_positions():
    inst = generate_synthetic(2, 3, 1, 1)
    dup = replace(inst, hospitals=(inst.hospitals[0], inst.hospitals[1], replace(inst.hospitals[2], id="H01")))
    (v,) = validate(dup)
    assert v.path == "hospitals[2].id" and "hospitals[0]" in v.message


def test_override_shape_checked():
    inst = generate_synthetic(2, 2, 3, 1)
    bad = replace(inst, distance_override=DistanceOverride(((1.0, 2.0, 3.0),), ((0.0,) * 3,) * 3))
    assert [v.path for v in validate(bad)] == ["distance_override.hospital_to_site"]


@pytest.mark.parametrize("text", ["{", "[]", '{"hospitals": 3}', "\xff"])
def test_parse_errors(text):
    with pytest.raises(InstanceParseError):
        loads_instance(text)


def test_unknown_and_missing_fields_rejected():
    doc = json.loads(dumps_instance(generate_synthetic(2, 1, 1, 1)))
    doc["hospitals"][0]["colour"] = "red"
    with pytest.raises(InstanceParseError, match="colour"):
        loads_instance(json.dumps(doc))
    del doc["hospitals"][0]["colour"]
    del doc["params"]["price"]
    with pytest.raises(InstanceParseError, match="price"):
        loads_instance(json.dumps(doc))


def test_instance_is_immutable():
    inst = generate_synthetic(1, 2, 2)
    assert isinstance(inst.hospitals, tuple)
    with pytest.raises(Exception):
        inst.hospitals[0].usage = 5  # type: ignore[misc]
    assert [f.name for f in fields(Hospital)] == ["id", "name", "lat", "lon", "usage"]


def test_unicode_names_preserved(forced_instance):
    h = replace(forced_instance.hospitals[0], name="Hôpital Saint-Jérôme 東")
    inst = replace(forced_instance, hospitals=(h,))
    data = dumps_instance(inst)
    assert loads_instance(data).hospitals[0].name == "Hôpital Saint-Jérôme 東"
    assert dumps_instance(loads_instance(data)) == data


def test_minimal_file_loads(forced_instance):
    inst = loads_instance(dumps_instance(forced_instance))
    assert (len(inst.hospitals), len(inst.sites), len(inst.disposal_sites)) == (1, 1, 1)


def test_disposal_cost_tracks_price():
    inst = generate_synthetic(1, 3, 3, 1, ranges=replace(RangeConfig(), price=(2.0, 2.0)))
    assert inst.params.price == 2.0
    assert all(0.40 <= d.unit_cost <= 0.60 for d in inst.disposal_sites)


def test_single_negative_usage_violation():
    inst = generate_synthetic(2, 5, 2, 1)
    hosp = list(inst.hospitals)
    hosp[3] = replace(hosp[3], usage=-4)
    assert [v.path for v in validate(replace(inst, hospitals=tuple(hosp)))] == ["hospitals[3].usage"]


def test_seeds_differ():
    assert generate_synthetic(1, 3, 3, 1) != generate_synthetic(2, 3, 3, 1)
