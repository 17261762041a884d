import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import bits_of, index_of, recursive_minimal_amplitude
from stdstate.errors import DegenerateLocationError, NotStandardFormError, ValidationError
from stdstate.gates import Cnot, ControlledU, SingleQubit, TwoLevel
from stdstate.standard import (
    LevelPair,
    StandardStateSpec,
    VariantSpec,
    build_minimal,
    build_standard,
    full_decompose,
    inject_variant,
    location_pattern,
    pattern_high,
    random_minimal_spec,
    random_pair,
    random_pattern,
    sparse_synthesize,
    theorem1_transform,
    variant_rotation,
)
from stdstate.statevector import (
    StateVector,
    apply_gate,
    equal_up_to_global_phase,
    fidelity,
    get_amplitude,
    new_zero_state,
    random_state,
)

S = 1 / np.sqrt(2)


def random_spec(n, K, rng):
    base = random_minimal_spec(n, rng)
    variants = []
    for _ in range(K):
        k = int(rng.integers(2, n + 1))
        variants.append(VariantSpec(k, random_pattern(n - k, rng), random_pair(rng)))
    return base.with_variants(variants)


def test_pair_normalization_enforced():
    with pytest.raises(ValidationError):
        LevelPair(0.6, 0.7)
    LevelPair(0.6, 0.8)


def test_two_qubit_example():
    st_ = build_minimal(StandardStateSpec(2, [LevelPair(0.6, 0.8)])).state
    assert np.allclose(st_.amps, [0.6, 0, 0, 0.8])


def test_trivial_pairs_give_zero_state():
    n = 5
    res = build_minimal(StandardStateSpec(n, [LevelPair(1, 0)] * (n - 1)))
    assert np.allclose(res.state.amps, new_zero_state(n).amps)
    assert len(res.script) == 2 * (n - 1)


def test_three_qubit_amplitude():
    res = build_minimal(StandardStateSpec(3, [LevelPair(0.6, 0.8), LevelPair(S, S)]))
    assert np.isclose(get_amplitude(res.state, "110"), 0.8 * S, atol=1e-12)
    assert np.isclose(0.8 * S, 0.565685, atol=1e-6)


@pytest.mark.parametrize("n", range(2, 9))
def test_product_formula_against_recursive_evaluator(n, rng):
    spec = random_minimal_spec(n, rng)
    state = build_minimal(spec).state
    pairs = [(p.alpha, p.beta) for p in spec.base_pairs]
    want = np.array([recursive_minimal_amplitude(pairs, bits_of(i, n)) for i in range(1 << n)])
    assert np.allclose(state.amps, want, atol=1e-13)


@pytest.mark.parametrize("n", [2, 3, 6, 11])
def test_minimal_gate_counts(n, rng):
    script = build_minimal(random_minimal_spec(n, rng)).script
    assert script.count(SingleQubit) == n - 1
    assert script.count(Cnot) == n - 1
    assert len(script) == 2 * (n - 1)


def test_variant_rotation_column_condition(rng):
    for _ in range(50):
        a, b = random_pair(rng, canonical=False), random_pair(rng, canonical=False)
        u = variant_rotation(a, b)
        assert np.allclose(u @ [a.alpha, a.beta], [b.alpha, b.beta], atol=1e-10)
        assert np.allclose(u.conj().T @ u, np.eye(2), atol=1e-12)
    assert np.allclose(variant_rotation(a, a), np.eye(2), atol=1e-12)
    flip = variant_rotation(LevelPair(1, 0), LevelPair(0, 1))
    assert np.allclose(flip @ [1, 0], [0, 1])


def test_variant_rotation_rejects_raw_tuples():
    with pytest.raises(ValidationError):
        variant_rotation((1, 0), LevelPair(1, 0))


def test_injection_emits_three_gates_with_pattern_controls(rng):
    spec = random_minimal_spec(6, rng)
    state = build_minimal(spec).state
    v = VariantSpec(3, "101", random_pair(rng))
    frag = inject_variant(state, spec, v)
    assert [type(g) for g in frag] == [Cnot, ControlledU, Cnot]
    assert frag[1].target == 3
    assert frag[1].controls == ((4, 1), (5, 0), (6, 1))
    assert abs(state.norm_squared() - 1) < 1e-12


def test_injection_changes_exactly_one_location_ratio(rng):
    n = 6
    spec = random_minimal_spec(n, rng)
    state = build_minimal(spec).state
    new = random_pair(rng)
    v = VariantSpec(2, "1100", new)
    inject_variant(state, spec, v)
    dec = full_decompose(state)
    for pattern in dec.locations(2):
        want = new if pattern == "1100" else spec.base(2)
        assert dec.pair(2, pattern).close_to(want, 1e-10)
    # the ratio of the two level-2 components at that branch is the new ratio
    on = dict(zip((3, 4, 5, 6), (1, 1, 0, 0)))
    c0 = get_amplitude(state, {1: 0, 2: 0, **on})
    c1 = get_amplitude(state, {1: 1, 2: 1, **on})
    assert np.isclose(c0 / c1, new.alpha / new.beta)


def test_injecting_base_pair_is_identity(rng):
    spec = random_minimal_spec(5, rng)
    state = build_minimal(spec).state
    before = state.amps.copy()
    inject_variant(state, spec, VariantSpec(3, "10", spec.base(3)))
    assert np.allclose(state.amps, before, atol=1e-12)


def test_pattern_length_checked(rng):
    spec = random_minimal_spec(5, rng)
    with pytest.raises(ValidationError):
        inject_variant(build_minimal(spec).state, spec, VariantSpec(3, "1", spec.base(3)))
    with pytest.raises(ValidationError):
        StandardStateSpec(5, spec.base_pairs, [VariantSpec(6, "", spec.base(3))])


def level4_variant_state(a, b, c, d, c34):
    """Five-qubit state with {c3, c4} replacing {c1, c2} on the q5 = 0 half,
    expanded term by term as the grouped expression is written out."""
    amps = np.zeros(32, dtype=complex)
    inner = {  # b-component -> (bits of q1 q2, a-component)
        1: [((0, 0), a[0]), ((1, 1), a[1])],
        2: [((0, 1), a[0]), ((1, 0), a[1])],
    }
    # (d value, q5) -> [(c value, q4, "first" bracket?)]
    blocks = [
        (d[0], 0, [(c34[0], 0, True), (c34[1], 1, False)]),
        (d[1], 1, [(c[0], 1, True), (c[1], 0, False)]),
    ]
    for dv, x5, cterms in blocks:
        for cv, x4, first in cterms:
            b_terms = [(b[0], 0, 1), (b[1], 1, 2)] if first else [(b[0], 1, 1), (b[1], 0, 2)]
            for bv, x3, which in b_terms:
                for (x1, x2), av in inner[which]:
                    amps[index_of((x1, x2, x3, x4, x5))] += av * bv * cv * dv
    return amps


def test_level4_variant_by_injection(rng):
    base = [random_pair(rng) for _ in range(4)]
    c34 = random_pair(rng)
    spec = StandardStateSpec(5, base, [VariantSpec(4, "0", c34)])
    got = build_standard(spec).state.amps
    want = level4_variant_state(*[(p.alpha, p.beta) for p in base], (c34.alpha, c34.beta))
    assert np.allclose(got, want, atol=1e-13)
    dec = full_decompose(StateVector(5, want))
    assert dec.deviating_locations(reference=base) == [(4, "0")]
    # with no reference the tie at level 4 goes to the all-zero location
    assert dec.deviating_locations() == [(4, "1")]
    assert dec.pair(4, "0").close_to(c34, 1e-10)


def test_build_standard_without_variants_equals_minimal(rng):
    spec = random_minimal_spec(6, rng)
    a, b = build_minimal(spec), build_standard(spec)
    assert np.array_equal(a.state.amps, b.state.amps)
    assert len(a.script) == len(b.script)


def test_seven_qubit_four_variant_gate_count(rng):
    spec = random_spec(7, 4, rng)
    assert len(build_standard(spec).script) == 24


@pytest.mark.parametrize("n,K", [(3, 1), (5, 3), (7, 4), (9, 12)])
def test_standard_gate_count_law(n, K, rng):
    for _ in range(5):
        spec = random_spec(n, K, rng)
        script = build_standard(spec).script
        assert len(script) == 2 * (n - 1) + 3 * K
        assert script.count(ControlledU) == K


def test_last_writer_wins_at_a_repeated_location(rng):
    spec = random_minimal_spec(4, rng)
    p, q = random_pair(rng), random_pair(rng)
    state = build_standard(spec.with_variants([VariantSpec(3, "1", p), VariantSpec(3, "1", q)])).state
    assert full_decompose(state).pair(3, "1").close_to(q, 1e-10)


def test_minimal_decomposition_is_uniform(rng):
    spec = random_minimal_spec(6, rng)
    dec = full_decompose(build_minimal(spec).state)
    assert dec.deviating_locations() == []
    for k in range(2, 7):
        for pattern in dec.locations(k):
            assert dec.pair(k, pattern).close_to(spec.base(k), 1e-10)


def test_decompose_build_round_trip(rng):
    for trial in range(200):
        n = int(rng.integers(2, 11))
        K = int(rng.integers(0, 21))
        spec = random_spec(n, K, rng)
        state = build_standard(spec).state
        dec = full_decompose(state)
        for k in range(2, n + 1):
            for pattern in dec.locations(k):
                assert dec.pair(k, pattern).close_to(spec.pair_at(k, pattern), 1e-9)
        planted = {(v.level, v.pattern) for v in spec.variants
                   if not spec.pair_at(v.level, v.pattern).canonical().close_to(
                       spec.base(v.level).canonical(), 1e-9, up_to_phase=False)}
        assert set(dec.deviating_locations(reference=spec.base_pairs)) == planted
        rebuilt = build_standard(dec.to_spec()).state
        assert equal_up_to_global_phase(rebuilt, state, 1e-9)


def test_degenerate_location_reported():
    # level-3 pair (1, 0) leaves nothing under the z3 = 1 location of level 2
    dec = full_decompose(new_zero_state(3))
    assert dec.degenerate == [(2, "1")]
    spec = StandardStateSpec(4, [LevelPair(S, S), LevelPair(1, 0), LevelPair(0.6, 0.8)])
    dec = full_decompose(build_minimal(spec).state)
    assert not dec.ok
    assert set(dec.degenerate) == {(2, location_pattern(h, 2)) for h in (1, 3)}
    with pytest.raises(DegenerateLocationError):
        dec.to_spec()


def test_odd_parity_weight_rejected():
    with pytest.raises(NotStandardFormError):
        full_decompose(StateVector(2, [0, 1, 0, 0]))


def test_pattern_gray_index_inverse():
    for width in range(0, 7):
        for h in range(1 << width):
            assert pattern_high(location_pattern(h, width)) == h if width else True


def test_theorem1_small_cases():
    out = theorem1_transform(new_zero_state(3))
    assert np.allclose(out.state.amps, new_zero_state(4).amps)
    res = theorem1_transform(StateVector(1, [0.6, 0.8j]))
    assert np.allclose(res.state.amps, [0.6, 0, 0, 0.8j])
    assert len(res.script) == 1


def test_theorem1_first_cnot_copies_q1(rng):
    psi = random_state(4, rng)
    out = theorem1_transform(psi)
    partial = StateVector(5, np.concatenate([psi.amps, np.zeros(16)]))
    apply_gate(partial, out.script[0])
    for i in np.nonzero(np.abs(partial.amps) > 0)[0]:
        b = bits_of(int(i), 5)
        assert b[4] == b[0]


def test_theorem1_output_is_standard(rng):
    for n in (1, 2, 3, 5):
        psi = random_state(n, rng)
        out = theorem1_transform(psi)
        assert out.script.count(Cnot) == n and len(out.script) == n
        dec = full_decompose(out.state, order=out.order)
        rebuilt = build_standard(dec.to_spec()).state
        assert fidelity(rebuilt, out.state) >= 1 - 1e-10


def test_sparse_small_cases():
    res = sparse_synthesize([(0, 1.0)], 3)
    assert len(res.script) == 0
    res = sparse_synthesize([(0, S), (5, S)], 3)
    assert len(res.script) == 1 and isinstance(res.script[0], TwoLevel)
    assert np.isclose(abs(res.state.amps[5]), S)
    with pytest.raises(ValidationError):
        sparse_synthesize([(0, 0.5), (1, 0.5)], 2)


def test_sparse_script_involves_entry_zero(rng):
    idx = rng.choice(1 << 10, size=8, replace=False)
    amps = rng.normal(size=8) + 1j * rng.normal(size=8)
    amps /= np.linalg.norm(amps)
    res = sparse_synthesize(zip(idx, amps), 10)
    assert len(res.script) <= 8
    assert all(0 in (g.index_i, g.index_j) for g in res.script)
    target = np.zeros(1 << 10, dtype=complex)
    target[idx] = amps
    assert fidelity(res.state, StateVector(10, target)) >= 1 - 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 7), st.integers(0, 6), st.integers(0, 2**31 - 1))
def test_build_is_normalized_and_even_parity(n, K, seed):
    rng = np.random.default_rng(seed)
    state = build_standard(random_spec(n, K, rng)).state
    assert abs(state.norm_squared() - 1) < 1e-12
    odd = [i for i in range(1 << n) if bin(i).count("1") % 2]
    assert np.allclose(state.amps[odd], 0, atol=1e-13)
