import json
import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

from panokit.task_gen import (FAMILIES, OPERATOR_FAMILY, CANONICAL_RATIOS, MixtureError, MixtureSpec, TaskInstance,
                              allocate, generate_all, natural_ratios, read_tasks, recompute_answer, sample_canonical,
                              tasks_digest, write_tasks)


@pytest.fixture(scope="module")
def pool(fixture_graph):
    return generate_all(fixture_graph, seed=7)


def test_operators_cover_families():
    assert set(OPERATOR_FAMILY.values()) == set(FAMILIES)
    assert len(OPERATOR_FAMILY) == 17
    assert sum(CANONICAL_RATIOS.values()) == pytest.approx(1.0)


def test_every_family_generated(pool):
    assert {t.family for t in pool} == set(FAMILIES)
    assert len({t.id for t in pool}) == len(pool)
    for t in pool:
        assert OPERATOR_FAMILY[t.operator] == t.family


def test_answers_recompute_from_graph(pool, fixture_graph):
    for t in pool:
        assert recompute_answer(t, fixture_graph) == t.answer_text, t.id


def test_choice_items_well_formed(pool):
    for t in pool:
        if t.answer_kind != "choice":
            continue
        assert len(set(t.options)) == len(t.options)
        assert t.answer in "ABCDEFGHIJKLMNOPQRSTUVWXYZ"[: len(t.options)]
        for opt in t.options:
            assert opt in t.prompt


def test_generation_is_seeded(fixture_graph, pool):
    assert tasks_digest(generate_all(fixture_graph, seed=7)) == tasks_digest(pool)
    assert tasks_digest(generate_all(fixture_graph, seed=8)) != tasks_digest(pool)


def test_turns_are_multiples_of_45(pool):
    turns = [t.provenance["params"]["turn_deg"] for t in pool if t.operator == "camera_rotation"]
    assert turns and all(abs(x) % 45 == 0 for x in turns)


def test_task_file_round_trip(tmp_path, pool):
    path = tmp_path / "tasks.jsonl"
    write_tasks(path, pool, "cfg", "prm")
    header = json.loads(path.read_text().splitlines()[0])
    assert header["_header"] and header["count"] == len(pool)
    assert header["config_sha256"] == "cfg"
    back = read_tasks(path)
    assert tasks_digest(back) == tasks_digest(pool)


@given(st.dictionaries(st.sampled_from(FAMILIES), st.integers(1, 100), min_size=1), st.integers(0, 5000))
def test_allocate_sums_and_stays_within_one(weights, total):
    s = sum(weights.values())
    ratios = {k: v / s for k, v in weights.items()}
    counts = allocate(ratios, total)
    assert sum(counts.values()) == total
    for f in FAMILIES:
        assert abs(counts[f] - ratios.get(f, 0.0) * total) < 1.0


def test_mixture_spec_validation():
    with pytest.raises(MixtureError):
        MixtureSpec({"semantic": 0.5}, 10)
    with pytest.raises(MixtureError):
        MixtureSpec({"nope": 1.0}, 10)
    with pytest.raises(MixtureError):
        MixtureSpec({"semantic": 1.0}, 10, per_scene_cap=0)


def test_empty_family_with_positive_ratio_is_an_error():
    pool = [TaskInstance("a", "semantic", "identification", "", "choice", "A", ("x",), {"panorama_id": "s"})]
    with pytest.raises(MixtureError):
        sample_canonical(pool, MixtureSpec({"semantic": 0.5, "angular": 0.5}, 2))


def test_sampling_deterministic_and_warns_when_short(pool):
    spec = MixtureSpec(natural_ratios(pool), 100, seed=3)
    a = sample_canonical(pool, spec)
    assert [t.id for t in a] == [t.id for t in sample_canonical(pool, spec)]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        short = sample_canonical(pool, MixtureSpec(dict(CANONICAL_RATIOS), 1000, seed=3))
    assert caught and len(short) < 1000
