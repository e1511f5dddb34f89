import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from gossip_learning.belief import (
    BeliefState,
    bayes_log_posterior,
    gossip_update,
    initial_belief,
    log_ratio,
    self_update,
)
from gossip_learning.errors import ImpossibleSignalError, ValidationError
from tests.test_world import tiny_world

UNINFORMATIVE = [[0.25, 0.75], [0.25, 0.75], [0.25, 0.75]]


def _belief(log_probs, agent=0, time=0):
    return BeliefState(agent=agent, time=time, log_probs=np.asarray(log_probs, dtype=float))


class TestKernel:
    def test_benchmark_initial_update(self, ex1_cfg):
        # uniform prior, agent 1 sees signal 0: posterior (5/13, 5/13, 3/13)
        b = initial_belief(ex1_cfg.world, 0, 0)
        assert b.time == 0 and b.agent == 0
        assert np.allclose(b.probs(), [5 / 13, 5 / 13, 3 / 13], rtol=1e-14, atol=0)

    def test_benchmark_self_update(self, ex1_cfg):
        # agent 2 from a uniform belief on signal 0: (3/10, 4/10, 3/10)
        start = _belief(np.log(np.full(3, 1 / 3)), agent=1, time=4)
        b = self_update(ex1_cfg.world, start, 0)
        assert b.time == 5 and b.agent == 1
        assert np.allclose(b.probs(), [0.3, 0.4, 0.3], rtol=1e-14, atol=0)

    def test_benchmark_gossip_update(self, ex1_cfg):
        # agent 1 refines a neighbor belief (0.2, 0.5, 0.3) with signal 0
        neighbor = _belief(np.log([0.2, 0.5, 0.3]), agent=2, time=7)
        b = gossip_update(ex1_cfg.world, neighbor, 0, 0)
        assert b.time == 8 and b.agent == 0
        assert np.allclose(b.probs(), [10 / 44, 25 / 44, 9 / 44], rtol=1e-14, atol=0)

    def test_gossip_from_own_belief_equals_self_update(self, ex1_cfg):
        own = _belief(np.log([0.6, 0.3, 0.1]), agent=1, time=3)
        a = self_update(ex1_cfg.world, own, 1)
        b = gossip_update(ex1_cfg.world, own, 1, 1)
        assert np.array_equal(a.log_probs, b.log_probs)

    def test_posterior_is_normalized_in_log_space(self, ex1_cfg):
        b = initial_belief(ex1_cfg.world, 3, 1)
        assert abs(np.exp(b.log_probs).sum() - 1.0) <= 1e-10

    def test_impossible_signal_raises(self):
        w = tiny_world([[[1.0, 0.0], [1.0, 0.0]]])
        with pytest.raises(ImpossibleSignalError):
            initial_belief(w, 0, 1)

    def test_zero_likelihood_on_one_state_collapses_it(self):
        w = tiny_world([[[1.0, 0.0], [0.5, 0.5]]])
        b = initial_belief(w, 0, 1)
        assert b.log_probs[0] == -np.inf
        assert b.log_probs[1] == 0.0

    def test_signal_out_of_range_rejected(self, ex1_cfg):
        with pytest.raises(ValidationError, match="signal"):
            initial_belief(ex1_cfg.world, 0, 2)
        with pytest.raises(ValidationError, match="signal"):
            initial_belief(ex1_cfg.world, 0, -1)

    def test_state_space_length_mismatch_rejected(self, ex1_cfg):
        neighbor = _belief(np.log([0.5, 0.5]), agent=0, time=0)
        with pytest.raises(ValidationError):
            gossip_update(ex1_cfg.world, neighbor, 0, 0)


class TestFixedPoint:
    @pytest.mark.parametrize("prior", [None, [0.5, 0.2, 0.3]])
    def test_identical_rows_hold_belief_constant_exactly(self, prior):
        w = tiny_world([UNINFORMATIVE], prior=prior)
        b = initial_belief(w, 0, 1)
        first = b.log_probs.copy()
        for t in range(500):
            b = self_update(w, b, t % 2)
            assert np.array_equal(b.log_probs, first)
        assert b.time == 500

    def test_initial_update_with_identical_rows_keeps_prior(self):
        w = tiny_world([UNINFORMATIVE], prior=[0.5, 0.2, 0.3])
        b = initial_belief(w, 0, 0)
        assert np.allclose(b.probs(), [0.5, 0.2, 0.3], rtol=1e-14, atol=0)


class TestBeliefState:
    def test_rejects_unnormalized_vector(self):
        with pytest.raises(ValidationError, match="belief mass"):
            _belief(np.log([0.5, 0.4]))

    def test_probs_exponentiates(self):
        b = _belief(np.log([0.25, 0.75]))
        assert np.allclose(b.probs(), [0.25, 0.75], rtol=1e-15, atol=0)

    def test_log_ratio_basic_and_neg_inf(self):
        b = _belief([np.log(0.5), np.log(0.5), -np.inf][0:2] + [-np.inf])
        # above: (0.5, 0.5, 0) as log probs
        assert log_ratio(b, 1, 0) == 0.0
        assert log_ratio(b, 2, 0) == -np.inf

    def test_log_ratio_needs_mass_on_true_state(self):
        b = _belief([0.0, -np.inf])
        with pytest.raises(ValidationError, match="zero mass"):
            log_ratio(b, 0, 1)


@settings(max_examples=200, deadline=None)
@given(data=st.data(), k=st.integers(2, 6))
def test_update_preserves_pairwise_ratios(data, k):
    raw_prior = np.array(data.draw(st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k)))
    raw_col = np.array(data.draw(st.lists(st.floats(0.001, 1.0), min_size=k, max_size=k)))
    log_prior = np.log(raw_prior / raw_prior.sum())
    log_col = np.log(raw_col)
    out = bayes_log_posterior(log_prior, log_col)
    a, b = data.draw(st.tuples(st.integers(0, k - 1), st.integers(0, k - 1)))
    got = out[a] - out[b]
    want = (log_prior[a] + log_col[a]) - (log_prior[b] + log_col[b])
    assert got == pytest.approx(want, abs=1e-12)
    assert abs(np.exp(out).sum() - 1.0) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(data=st.data(), k=st.integers(2, 5), shift=st.floats(-30.0, 30.0))
def test_kernel_invariant_to_log_prior_normalization(data, k, shift):
    raw = np.array(data.draw(st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k)))
    col = np.array(data.draw(st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k)))
    assume(col.max() / col.min() > 1.0 + 1e-9)  # constant columns short-circuit
    log_prior = np.log(raw / raw.sum())
    a = bayes_log_posterior(log_prior, np.log(col))
    b = bayes_log_posterior(log_prior + shift, np.log(col))
    assert np.allclose(a, b, atol=1e-12, rtol=0)


def test_constant_column_returns_the_prior_bitwise():
    log_prior = np.log(np.array([0.5, 0.2, 0.3]))
    out = bayes_log_posterior(log_prior, np.log(np.array([0.25, 0.25, 0.25])))
    assert np.array_equal(out, log_prior)
    assert out is not log_prior
