import math

import pytest

from api.errors import ConfigurationError, FieldDomainError
from mpc.division import divide_in_clear, leaks, local_fraction
from mpc.field import DEFAULT_PRIME, make_rng, sample_bounded
from mpc.fixed_point import FixedPointParams, ceil_log2, exact_newton_iterates
from project_platform.protocols import inverse_scale
from tests.spn_factories import SMALL_PRIME, ForcedRandomness, open_session


class TestFixedPointParams:

    def test_defaults(self):
        fp = FixedPointParams()
        assert (fp.d, fp.e, fp.rho) == (256, 2 ** 16, 40)
        assert fp.tolerance == 2

    def test_precision_must_be_a_power_of_two(self):
        with pytest.raises(ConfigurationError):
            FixedPointParams(e=1000)

    def test_warmup_must_cover_log_d(self):
        with pytest.raises(ConfigurationError):
            FixedPointParams(d=256, warmup_iters=7)

    def test_t_prec_bound(self):
        with pytest.raises(ConfigurationError):
            FixedPointParams(t_prec=2)


class TestDivisionInTheClear:
    """The local steps of division by a public integer."""

    def test_result_is_floor_or_ceil(self):
        rng = make_rng(11)
        violations = 0
        for d in (2, 16, 256):
            for u in range(4097):
                for _ in range(8):
                    result = divide_in_clear(u, d, sample_bounded(2 ** 40, rng))
                    if not (u // d <= result <= -(-u // d)) or abs(d * result - u) > d:
                        violations += 1
        assert violations == 0

    def test_exact_multiples_divide_exactly(self):
        rng = make_rng(12)
        for u in (0, 1000, 45000, 330000):
            assert divide_in_clear(u, 1000, sample_bounded(2 ** 16, rng)) == u // 1000

    def test_leak_frequency_is_bounded(self):
        rho, d, trials = 12, 16, 100_000
        rng = make_rng(13)
        hits = sum(leaks(sample_bounded(d, rng), sample_bounded(2 ** rho, rng), d, rho) for _ in range(trials))
        assert hits / trials <= 2 * d / 2 ** rho

    def test_local_fraction_rounds_half_up(self):
        assert local_fraction(71, 256, 1000, 3) == 92
        assert local_fraction(209, 786, 1000, 3) == 89
        assert local_fraction(320, 1127, 1000, 3) == 95
        assert local_fraction(1, 4, 2, 1) == 1

    def test_local_fraction_needs_rows(self):
        with pytest.raises(FieldDomainError):
            local_fraction(0, 0, 1000, 3)


class TestNewtonRecurrence:

    @pytest.mark.parametrize("d", [16, 256])
    def test_warmup_lands_within_a_factor_two(self, d):
        steps = ceil_log2(d)
        for b in range(1, d + 1):
            u = exact_newton_iterates(b, d, steps)[-1]
            assert d / (2 * b) <= u <= d / b, (d, b, u)

    def test_converges_to_scale_over_b(self):
        iterates = exact_newton_iterates(3, 48, 10)
        assert abs(iterates[-1] - 16) < 1e-6


class TestSecureEngine:

    def test_multiplication_and_dot_products(self):
        session, engine, _ = open_session(5)
        with session:
            a, b, c, d = engine.public([6, 7, 10, 20])
            product = engine.mul([a], [b])
            dot = engine.dot([[(a, b), (c, d)]])
            assert engine.open(product + dot) == [42, 242]

    @pytest.mark.parametrize("n, t", [(3, 1), (5, 2), (13, 6)])
    def test_products_of_random_pairs(self, n, t):
        session, engine, _ = open_session(n)
        assert engine.session.sharing.t == t
        rng = make_rng(n, "pairs")
        pairs = [(sample_bounded(DEFAULT_PRIME, rng), sample_bounded(DEFAULT_PRIME, rng)) for _ in range(1000)]
        with session:
            private = session.members[1].state.private
            for k, (x, y) in enumerate(pairs):
                private[f"x{k}"], private[f"y{k}"] = x, y
            left = engine.input([1], [f"x{k}" for k in range(len(pairs))])
            right = engine.input([1], [f"y{k}" for k in range(len(pairs))])
            products = engine.open(engine.mul(left, right))
        assert products == [x * y % DEFAULT_PRIME for x, y in pairs]

    def test_linear_combinations(self):
        session, engine, _ = open_session(3)
        with session:
            x, y = engine.public([100, 23])
            out = engine.linear([[(3, x), (-1, y)]], [1]) + engine.sub([x], [y]) + engine.scale([y], 2)
            assert engine.open(out) == [278, 77, 46]

    def test_inputs_sum_over_owners(self):
        session, engine, _ = open_session(3)
        with session:
            for pid, value in ((1, 5), (2, 7), (3, 11)):
                session.members[pid].state.private["count"] = value
            assert engine.open(engine.input([1, 2, 3], ["count"])) == [23]

    def test_division_by_a_public_integer(self):
        session, engine, _ = open_session(3)
        values = [0, 1, 15, 16, 17, 255, 1000, 4095]
        with session:
            results = engine.open(engine.div_by_public(engine.public(values), 16))
        for u, result in zip(values, results):
            assert u // 16 <= result <= -(-u // 16)

    @pytest.mark.parametrize("d", [2, 16, 256])
    def test_division_over_every_small_numerator(self, d):
        values = list(range(4097)) * 8
        session, engine, _ = open_session(3, seed=d)
        with session:
            results = engine.open(engine.div_by_public(engine.public(values), d))
        violations = [(u, result) for u, result in zip(values, results)
                      if not (u // d <= result <= -(-u // d)) or abs(d * result - u) > d]
        assert violations == []

    def test_division_with_a_known_mask(self):
        session, engine, _ = open_session(3)
        with session:
            alice = session.members[engine.session.alice]
            alice.rng = ForcedRandomness([300], alice.rng)
            # q = 300 mod 256 = 44, Bob sees z = 1300 and w = 20, (1000 + 44 - 20) / 256 = 4
            assert engine.open(engine.div_by_public(engine.public([1000]), 256)) == [4]

    def test_truncating_fixed_point_weights(self):
        session, engine, _ = open_session(3)
        rng = make_rng(21)
        weights = [rng.randrange(256) for _ in range(100)]
        with session:
            results = engine.open(engine.truncate(engine.public([256 * w for w in weights]), 256))
            edges = engine.open(engine.truncate(engine.public([0, 7]), 7))
        assert all(abs(r - w) <= 1 for r, w in zip(results, weights))
        assert edges == [0, 1]

    def test_division_by_one_is_the_identity(self):
        session, engine, _ = open_session(3)
        with session:
            ids = engine.public([9])
            assert engine.div_by_public(ids, 1) == ids

    def test_divisor_outside_the_field(self):
        session, engine, _ = open_session(3)
        with session:
            with pytest.raises(FieldDomainError):
                engine.div_by_public(engine.public([9]), 0)

    def test_zero_test(self):
        session, engine, _ = open_session(3)
        with session:
            assert engine.is_zero(engine.public([0, 5, 0, 1])) == [True, False, True, False]

    def test_approximate_inverse(self):
        session, engine, _ = open_session(3)
        fp = engine.fp
        divisors = [1, 3, 100, 255, 256]
        with session:
            results = engine.open(engine.approx_inverse(engine.public(divisors)))
        for b, result in zip(divisors, results):
            expected = fp.d * fp.e / b
            assert abs(result - expected) <= expected * fp.relative_error + 4, (b, result, expected)

    def test_approximate_inverse_on_a_small_scale(self):
        session, engine, _ = open_session(3, fixed_point=FixedPointParams(d=16))
        fp = engine.fp
        divisors = list(range(1, 17))
        with session:
            results = engine.open(engine.approx_inverse(engine.public(divisors)))
        for b, result in zip(divisors, results):
            expected = fp.d * fp.e / b
            assert abs(result - expected) <= expected * fp.relative_error + 4, (b, result, expected)

    def test_secure_divide(self):
        session, engine, _ = open_session(3)
        with session:
            a = engine.public([64, 100, 0, 1])
            b = engine.public([128, 200, 7, 3])
            results = engine.open(engine.secure_divide(a, b))
        for result, expected in zip(results, [128, 128, 0, 256 / 3]):
            assert abs(result - expected) <= engine.fp.tolerance

    @pytest.mark.parametrize("d", [16, 256])
    def test_shared_warmup_lands_within_a_factor_two(self, d):
        divisors = list(range(1, d + 1))
        session, engine, _ = open_session(3)
        with session:
            start = engine.public([1] * d)
            results = engine.open(engine.newton(start, engine.public(divisors), d, ceil_log2(d)))
        misses = [(b, u) for b, u in zip(divisors, results) if not d / (2 * b) - 2 <= u <= d / b + 2]
        assert misses == []

    def test_secure_divide_above_d(self):
        session, engine, _ = open_session(3, fixed_point=FixedPointParams(d=1000))
        with session:
            result, = engine.open(engine.secure_divide(engine.public([600]), engine.public([2169]),
                                                       inverse_scale(2169, 1000)))
        assert abs(result - 277) <= engine.fp.tolerance

    def test_secure_divide_on_random_pairs(self):
        rng = make_rng(31)
        divisors = [1 + sample_bounded(10 ** 4, rng) for _ in range(200)]
        numerators = [1 + sample_bounded(b, rng) for b in divisors]
        session, engine, _ = open_session(3)
        with session:
            results = engine.open(engine.secure_divide(engine.public(numerators), engine.public(divisors),
                                                       inverse_scale(10 ** 4, engine.fp.d)))
        for a, b, result in zip(numerators, divisors, results):
            assert abs(result - round(engine.fp.d * a / b)) <= 2, (a, b, result)

    def test_secure_divide_scale_must_be_a_multiple_of_d(self):
        session, engine, _ = open_session(3)
        with session:
            with pytest.raises(ConfigurationError):
                engine.secure_divide(engine.public([1]), engine.public([2]), scale=300)

    def test_headroom(self):
        session, engine, _ = open_session(3, prime=SMALL_PRIME,
                                          fixed_point=FixedPointParams(d=1000, e=256, rho=16))
        with pytest.raises(ConfigurationError):
            engine.check_headroom(2000)

    def test_field_too_small_for_the_mask(self):
        with pytest.raises(ConfigurationError):
            open_session(3, prime=SMALL_PRIME)

    def test_warmup_iteration_count(self):
        assert ceil_log2(256) == 8
        assert ceil_log2(257) == 9
        assert ceil_log2(1) == 0
        assert math.ceil(math.log2(1000)) == ceil_log2(1000)
