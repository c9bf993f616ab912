"""Cross-validation suite: every closed form checked against the simulator.

Each check compares an analytic result with an independent route (Monte Carlo
transcript, numeric optimization, quadrature) at a fixed sigma or absolute
gate, and reports one line per comparison. The CLI `validate` command and the
acceptance tests both run these.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincinv

from . import capacity, simulate
from .channels import (BinarySymmetric, BitFlipModel, DecoherenceModel,
                       Erasure, RandomBijective, bernoulli_noise,
                       binary_entropy, wait_geometric_noise, xor_table)
from .numerics import golden_section_extremize, quadrature_laplace
from .queueing import (DelayConvention, Deterministic, Empirical, Exponential,
                       Gamma, InstabilityError, PoissonArrivals, Uniform,
                       default_burn_in, lindley_waits)

N_DEFAULT = 10 ** 6
SIGMA_GATE = 4.0


@dataclass
class CheckOutcome:
    """Aggregated result of one named validation check."""

    name: str
    passed: bool = True
    lines: list = field(default_factory=list)

    def note(self, ok, text):
        self.lines.append(("pass: " if ok else "FAIL: ") + text)
        self.passed = self.passed and bool(ok)
        return ok

    def expect_raises(self, exc_type, fn, label):
        try:
            fn()
        except exc_type:
            return self.note(True, f"{label} raises {exc_type.__name__}")
        except Exception as other:  # noqa: BLE001 - report whatever came out
            return self.note(False, f"{label} raised {type(other).__name__} instead")
        return self.note(False, f"{label} did not raise")


def _seed_for(base, index):
    return np.random.SeedSequence([0 if base is None else int(base), index])


def _erasure_spec(lam, kappa, service=None):
    return capacity.QueueChannelSpec(
        arrival=PoissonArrivals(lam),
        service=service if service is not None else Exponential(1.0),
        channel=Erasure(DecoherenceModel.exponential(kappa), alphabet_size=2))


def _bsc_spec(lam, kappa, service=None, convention=DelayConvention.WAITING_BEFORE_SERVICE,
              csir=False):
    return capacity.QueueChannelSpec(
        arrival=PoissonArrivals(lam),
        service=service if service is not None else Exponential(1.0),
        channel=BinarySymmetric(BitFlipModel.exponential(kappa)),
        delay_convention=convention,
        receiver_knows_timing=csir)


def _alt_services():
    return (Exponential(1.0), Gamma(2.0, 0.5), Uniform(0.5, 1.5))


def _service_quantile(service, u):
    """Inverse-CDF sampling so different service laws share the same uniforms."""
    if isinstance(service, Deterministic):
        return np.full_like(u, service.value)
    if isinstance(service, Exponential):
        return -np.log1p(-u) * service.mean
    if isinstance(service, Gamma):
        return gammaincinv(service.shape, u) * service.scale
    if isinstance(service, Uniform):
        return service.low + (service.high - service.low) * u
    raise TypeError(f"no quantile sampler for {type(service).__name__}")


# --- the eleven checks -----------------------------------------------------

def check_mm1_erasure_formula(seed=None):
    """Closed-form M/M/1 erasure capacity vs end-to-end transcript estimates."""
    out = CheckOutcome("erasure-mm1-formula-vs-simulation")
    children = iter(_seed_for(seed, 1).spawn(6))
    for kappa in (0.1, 1.0):
        for lam in (0.3, 0.5, 0.7):
            formula = capacity.mm1_capacity_closed_form(lam, kappa).bits_per_sec
            tr = simulate.simulate_transmission(_erasure_spec(lam, kappa),
                                                N_DEFAULT, seed=next(children))
            rep = simulate.validate_formula(formula,
                                            simulate.estimate_erasure_capacity(tr),
                                            tolerance_sigma=SIGMA_GATE)
            out.note(rep.passed, f"lam={lam:g} kappa={kappa:g}: {rep}")
    return out


def check_wait_transform(seed=None):
    """Transform values E[exp(-kappa*W)] vs Lindley sample averages."""
    out = CheckOutcome("wait-transform-vs-simulation")
    services = (Exponential(1.0), Deterministic(1.0), Gamma(2.0, 0.5))
    children = iter(_seed_for(seed, 2).spawn(len(services) * 4))
    for service in services:
        for lam in (0.3, 0.7):
            for kappa in (0.1, 1.0):
                formula = capacity.pk_wait_transform(lam, service, kappa)
                est = simulate.estimate_expectation_over_pi(
                    lambda w, k=kappa: np.exp(-k * w),
                    _erasure_spec(lam, kappa, service), N_DEFAULT,
                    seed=next(children))
                rep = simulate.validate_formula(formula, est, tolerance_sigma=SIGMA_GATE)
                out.note(rep.passed,
                         f"{service.kind} lam={lam:g} kappa={kappa:g}: {rep}")
    return out


def check_optimal_rate_agreement(seed=None):
    """Closed-form optimal arrival rate vs golden-section maximization."""
    out = CheckOutcome("optimal-rate-closed-form-vs-numeric")
    for service in (Exponential(1.0), Deterministic(1.0), Gamma(2.0, 0.5)):
        for kappa in (0.01, 0.1, 1.0):
            closed = capacity.optimal_lambda_mg1(service, kappa)
            numeric = golden_section_extremize(
                lambda lam: lam * capacity.pk_wait_transform(lam, service, kappa),
                1e-9, 1.0 - 1e-9, tol=1e-8, mode="max")
            gap = abs(closed - numeric.argopt)
            out.note(gap <= 1e-6,
                     f"{service.kind} kappa={kappa:g}: closed {closed:.9f} vs "
                     f"numeric {numeric.argopt:.9f} (|diff|={gap:.2e})")
    # frozen unit-rate-exponential values, from the closed form evaluated in
    # high-precision arithmetic
    for kappa, expected in ((1.0, 0.5857864376269049), (0.01, 0.9095012437887911)):
        got = capacity.optimal_lambda_mg1(Exponential(1.0), kappa)
        out.note(abs(got - expected) <= 1e-6,
                 f"exponential kappa={kappa:g}: lam*={got:.9f} expected {expected:.9f}")
    return out


def check_erasure_service_dominance(seed=None):
    """Deterministic service beats the same-mean alternatives, analytically."""
    out = CheckOutcome("erasure-deterministic-service-dominance")
    det = Deterministic(1.0)
    for kappa in (0.1, 1.0):
        worst = math.inf
        ok = True
        for lam in [round(0.1 * i, 1) for i in range(1, 10)]:
            cap_det = lam * capacity.pk_wait_transform(lam, det, kappa)
            for alt in _alt_services():
                margin = cap_det - lam * capacity.pk_wait_transform(lam, alt, kappa)
                worst = min(worst, margin)
                ok = ok and margin > 0.0
        out.note(ok, f"kappa={kappa:g}: strict at all 27 grid points "
                     f"(thinnest margin {worst:.3e})")
    return out


def check_bsc_service_dominance(seed=None):
    """Deterministic service beats alternatives for the flip channel without
    timing information, measured with common random numbers."""
    out = CheckOutcome("bsc-deterministic-service-dominance")
    det = Deterministic(1.0)
    grid = [round(0.1 * i, 1) for i in range(1, 10)]
    children = iter(_seed_for(seed, 5).spawn(len(grid) * 2))
    n = N_DEFAULT
    for kappa in (0.1, 1.0):
        worst_sigma = math.inf
        ok = True
        for lam in grid:
            rng = np.random.default_rng(next(children))
            burn = default_burn_in(lam, 1.0)
            total = n + burn
            gaps = rng.exponential(1.0 / lam, size=total)
            u_service = rng.random(total)
            mean_phi = {}
            batch_phi = {}
            b = math.ceil(math.sqrt(n))
            m = n // b
            for service in (det,) + _alt_services():
                s = _service_quantile(service, u_service)
                wq = lindley_waits(s, gaps)[burn:]
                phi = -0.5 * np.expm1(-kappa * wq)
                mean_phi[service.kind] = phi.mean()
                batch_phi[service.kind] = phi[: m * b].reshape(m, b).mean(axis=1)
            h_det = binary_entropy(mean_phi[det.kind])
            hb_det = binary_entropy(batch_phi[det.kind])
            for alt in _alt_services():
                margin = binary_entropy(mean_phi[alt.kind]) - h_det
                paired = binary_entropy(batch_phi[alt.kind]) - hb_det
                se = paired.std(ddof=1) / math.sqrt(m)
                sigma = margin / se if se > 0 else math.inf
                worst_sigma = min(worst_sigma, sigma)
                ok = ok and margin > SIGMA_GATE * se
        out.note(ok, f"kappa={kappa:g}: deterministic dominates all alternatives "
                     f"at every lam (thinnest margin {worst_sigma:.1f} sigma)")
    return out


def check_csir_ordering(seed=None):
    """Timing side information never hurts; with near-degenerate delays the
    two flip-channel values coincide within joint error bars."""
    out = CheckOutcome("bsc-csir-ordering-and-degenerate-equality")
    rng = np.random.default_rng(_seed_for(seed, 6))
    services = (Exponential(1.0), Deterministic(1.0), Gamma(2.0, 0.5), Uniform(0.5, 1.5))
    ok = True
    min_gap = math.inf
    for _ in range(20):
        lam = rng.uniform(0.1, 0.85)
        kappa = 10.0 ** rng.uniform(-1.0, 0.5)
        service = services[rng.integers(len(services))]
        convention = (DelayConvention.SOJOURN if rng.random() < 0.5
                      else DelayConvention.WAITING_BEFORE_SERVICE)
        spec = _bsc_spec(lam, kappa, service, convention)
        # both expectations over one shared wait sample set, so the ordering
        # is the concavity gap itself, not a Monte Carlo race
        waits = simulate.stationary_wait_samples(
            spec.arrival, spec.service, 200_000, seed=int(rng.integers(2 ** 63)),
            convention=convention)
        phi = spec.channel.flip.flip_prob(waits.samples)
        c_csir = capacity.bsc_capacity(
            _bsc_spec(lam, kappa, service, convention, csir=True),
            {capacity.E_H_PHI: float(binary_entropy(phi).mean())}).bits_per_sec
        c_blind = capacity.bsc_capacity(
            spec, {capacity.E_PHI: float(phi.mean())}).bits_per_sec
        gap = c_csir - c_blind
        min_gap = min(min_gap, gap)
        ok = ok and gap >= -1e-12
    out.note(ok, f"20 randomized specs: timing-aware >= blind every time "
                 f"(smallest gap {min_gap:.3e})")
    # equality corner: sojourn delays degenerate at the deterministic service
    # time as lam -> 0, where the concavity gap vanishes
    spec = _bsc_spec(1e-4, 1.0, Deterministic(1.0), DelayConvention.SOJOURN)
    tr = simulate.simulate_transmission(spec, N_DEFAULT, seed=_seed_for(seed, 66))
    with_t = simulate.estimate_bsc_capacity(tr, csir=True)
    without = simulate.estimate_bsc_capacity(tr, csir=False)
    joint = math.hypot(with_t.std_error, without.std_error)
    diff = abs(with_t.value - without.value)
    out.note(diff <= SIGMA_GATE * joint,
             f"deterministic service, lam=1e-4, sojourn: |csir - blind| = {diff:.2e}"
             f" = {diff / joint:.2f} joint sigma" if joint > 0 else "degenerate")
    return out


def check_bijective_bounds(seed=None):
    """No-timing capacity bounds sandwich the unpredictable-queue value, and
    the XOR/Bernoulli instance reduces to the flip-channel estimator."""
    out = CheckOutcome("bijective-bound-sandwich")
    rng = np.random.default_rng(_seed_for(seed, 7))
    services = (Exponential(1.0), Deterministic(1.0), Gamma(2.0, 0.5), Uniform(0.5, 1.5))
    n = 300_000
    for i in range(10):
        k = int(rng.integers(2, 6))
        table = tuple(tuple(int(v) for v in rng.permutation(k)) for _ in range(k))
        kappa = 10.0 ** rng.uniform(-1.0, 0.3)
        lam = rng.uniform(0.2, 0.8)
        service = services[rng.integers(len(services))]
        channel = RandomBijective(tuple(range(k)), table, wait_geometric_noise(kappa, k))
        spec = capacity.QueueChannelSpec(arrival=PoissonArrivals(lam), service=service,
                                         channel=channel)
        lower, upper, _ = simulate.estimate_bijective_bounds(
            spec, n, seed=int(rng.integers(2 ** 63)))
        lower_b, _, _ = simulate.estimate_bijective_bounds(
            spec, n, seed=int(rng.integers(2 ** 63)))
        # route the independent replicate through the exact-value formula
        h_mean = math.log2(k) - lower_b.value / lam
        exact = capacity.bijective_capacity(
            spec, {capacity.H_MEAN_NOISE: h_mean}, assume_unpredictable=True)
        ordered = lower.value <= upper.value + 1e-12
        lo_gap = (exact.bits_per_sec - lower.value) / math.hypot(lower.std_error,
                                                                 lower_b.std_error)
        hi_gap = (upper.value - exact.bits_per_sec) / math.hypot(upper.std_error,
                                                                 lower_b.std_error)
        ok = ordered and lo_gap >= -SIGMA_GATE and hi_gap >= -SIGMA_GATE
        out.note(ok, f"spec {i}: k={k} lam={lam:.3f} kappa={kappa:.3f} "
                     f"{service.kind}: lower {lower.value:.4f} <= exact "
                     f"{exact.bits_per_sec:.4f} <= upper {upper.value:.4f} "
                     f"(slacks {lo_gap:+.1f}, {hi_gap:+.1f} sigma)")
    # XOR/Bernoulli reduction
    lam, kappa = 0.5, 1.0
    flip = BitFlipModel.exponential(kappa)
    xor_spec = capacity.QueueChannelSpec(
        arrival=PoissonArrivals(lam), service=Exponential(1.0),
        channel=RandomBijective((0, 1), xor_table(2), bernoulli_noise(flip)),
        receiver_knows_timing=True)
    _, _, csir_exact = simulate.estimate_bijective_bounds(
        spec=xor_spec, n=n, seed=_seed_for(seed, 77))
    tr = simulate.simulate_transmission(_bsc_spec(lam, kappa, csir=True), n,
                                        seed=_seed_for(seed, 78))
    bsc_est = simulate.estimate_bsc_capacity(tr, csir=True)
    joint = math.hypot(csir_exact.std_error, bsc_est.std_error)
    diff = abs(csir_exact.value - bsc_est.value)
    out.note(diff <= SIGMA_GATE * joint,
             f"XOR/Bernoulli vs flip-channel estimator: |diff| = {diff:.2e} "
             f"= {diff / joint:.2f} joint sigma")
    return out


def check_sweep_curve_shape(seed=None):
    """Capacity curves: unimodal in lam, peak at the closed-form rate, and the
    post-peak falloff thresholds."""
    out = CheckOutcome("sweep-curve-shape")
    lambdas = [round(0.01 * i, 2) for i in range(1, 100)]
    kappas = (0.01, 0.1, 1.0)
    rows = simulate.sweep_rows(lambdas, kappas, n=0)
    for kappa in kappas:
        values = [r["capacity_analytic"] for r in rows if r["kappa"] == kappa]
        grid = [r["lambda"] for r in rows if r["kappa"] == kappa]
        diffs = np.diff(values)
        signs = np.sign(diffs[np.abs(diffs) > 1e-12])
        changes = int(np.count_nonzero(np.diff(signs)))
        out.note(changes <= 1, f"kappa={kappa:g}: unimodal ({changes} sign change)")
        peak_lam = grid[int(np.argmax(values))]
        closed = capacity.optimal_lambda_mg1(Exponential(1.0), kappa)
        out.note(abs(peak_lam - closed) <= 0.01 + 1e-9,
                 f"kappa={kappa:g}: grid argmax {peak_lam:g} within one step of "
                 f"closed form {closed:.6f}")
        ratio = values[grid.index(0.99)] / max(values)
        out.note(ratio < 0.25,
                 f"kappa={kappa:g}: capacity at lam=0.99 is {ratio:.3f} of peak "
                 f"(< 0.25 required)")
    return out


def check_noiseless_and_instability(seed=None):
    """Tiny kappa reduces capacity to the arrival rate; overload is rejected
    by every entry point."""
    out = CheckOutcome("noiseless-limit-and-instability")
    for lam in (0.3, 0.7):
        c_mm1 = capacity.mm1_capacity_closed_form(lam, 1e-6).bits_per_sec
        out.note(abs(c_mm1 - lam) <= 1e-3,
                 f"mm1 lam={lam:g}, kappa=1e-6: capacity {c_mm1:.6f} within 1e-3 of lam")
        c_det = lam * capacity.pk_wait_transform(lam, Deterministic(1.0), 1e-6)
        out.note(abs(c_det - lam) <= 1e-3,
                 f"deterministic-service lam={lam:g}: capacity {c_det:.6f} within 1e-3")
    lam = 1.2
    spec = _erasure_spec(lam, 1.0)
    bspec = _bsc_spec(lam, 1.0)
    jspec = capacity.QueueChannelSpec(
        arrival=PoissonArrivals(lam), service=Exponential(1.0),
        channel=RandomBijective((0, 1), xor_table(2),
                                bernoulli_noise(BitFlipModel.exponential(1.0))))
    entry_points = [
        ("stationary_wait_samples",
         lambda: simulate.stationary_wait_samples(spec.arrival, spec.service, 10)),
        ("pk_wait_transform",
         lambda: capacity.pk_wait_transform(lam, Exponential(1.0), 1.0)),
        ("erasure_capacity", lambda: capacity.erasure_capacity(spec)),
        ("mm1_capacity_closed_form",
         lambda: capacity.mm1_capacity_closed_form(lam, 1.0)),
        ("bsc_capacity",
         lambda: capacity.bsc_capacity(bspec, {capacity.E_PHI: 0.1})),
        ("bijective_capacity",
         lambda: capacity.bijective_capacity(jspec, {capacity.H_MEAN_NOISE: 0.1},
                                             assume_unpredictable=True)),
        ("simulate_transmission",
         lambda: simulate.simulate_transmission(spec, 10, seed=0)),
        ("estimate_expectation_over_pi",
         lambda: simulate.estimate_expectation_over_pi(lambda w: w, spec, 10)),
        ("estimate_bijective_bounds",
         lambda: simulate.estimate_bijective_bounds(jspec, 10, seed=0)),
    ]
    for label, fn in entry_points:
        out.expect_raises(InstabilityError, fn, f"lam=1.2: {label}")
    return out


def check_numerics_gates(seed=None):
    """Quadrature against the closed-form transform; optimizer on knowns."""
    out = CheckOutcome("numerics-gates")
    worst = 0.0
    for u in (0.1, 1.0, 10.0):
        for kappa in (0.1, 1.0, 10.0):
            model = DecoherenceModel.exponential(kappa)
            got = quadrature_laplace(model.p, u)
            worst = max(worst, abs(got - model.laplace(u)))
    out.note(worst <= 1e-8, f"quadrature vs closed form on 9-point grid: "
                            f"worst |diff| = {worst:.2e}")
    quad = golden_section_extremize(lambda x: -(x - 0.3) ** 2, 0.0, 1.0,
                                    tol=1e-8, mode="max")
    out.note(abs(quad.argopt - 0.3) <= 1e-7,
             f"quadratic argmax {quad.argopt:.10f} within 1e-7 of 0.3")
    curve = golden_section_extremize(
        lambda lam: lam * (1.0 - lam) / (1.0 - 0.5 * lam), 0.0, 1.0 - 1e-12,
        tol=1e-8, mode="max")
    out.note(abs(curve.argopt - 0.5857864376269049) <= 1e-6,
             f"capacity-curve argmax {curve.argopt:.9f} matches closed form")
    edge = golden_section_extremize(lambda x: x, 0.0, 1.0, tol=1e-8, mode="max")
    out.note(edge.boundary and edge.argopt == 1.0,
             f"monotone objective reported at boundary ({edge.argopt:g})")
    return out


def check_optimizer_route_discrepancy(seed=None):
    """The two optimal-rate routes disagree; simulation certifies the
    transform route's candidate carries more capacity."""
    out = CheckOutcome("optimal-rate-route-discrepancy")
    kappa = 1.0
    lam_pk = capacity.optimal_lambda_mg1(Exponential(1.0), kappa)
    route = capacity.optimal_lambda_mm1_laplace(
        DecoherenceModel.exponential(kappa).laplace)
    gap = abs(lam_pk - route.lam_star)
    out.note(gap > 1e-3, f"candidates differ: transform {lam_pk:.6f} vs "
                         f"exponential-premise {route.lam_star:.6f} (|diff|={gap:.4f})")
    children = iter(_seed_for(seed, 11).spawn(2))
    estimates = {}
    for label, lam in (("transform", lam_pk), ("premise", route.lam_star)):
        tr = simulate.simulate_transmission(_erasure_spec(lam, kappa), N_DEFAULT,
                                            seed=next(children))
        estimates[label] = simulate.estimate_erasure_capacity(tr)
    margin = estimates["transform"].value - estimates["premise"].value
    joint = math.hypot(estimates["transform"].std_error,
                       estimates["premise"].std_error)
    out.note(margin > SIGMA_GATE * joint,
             f"measured capacity {estimates['transform'].value:.6f} vs "
             f"{estimates['premise'].value:.6f}: margin {margin / joint:.1f} "
             f"joint sigma in favor of the transform route")
    return out


ALL_CHECKS = (
    check_mm1_erasure_formula,
    check_wait_transform,
    check_optimal_rate_agreement,
    check_erasure_service_dominance,
    check_bsc_service_dominance,
    check_csir_ordering,
    check_bijective_bounds,
    check_sweep_curve_shape,
    check_noiseless_and_instability,
    check_numerics_gates,
    check_optimizer_route_discrepancy,
)

SUITES = {
    "all": ALL_CHECKS,
    "erasure": (check_mm1_erasure_formula, check_wait_transform,
                check_optimal_rate_agreement, check_sweep_curve_shape,
                check_noiseless_and_instability, check_numerics_gates,
                check_optimizer_route_discrepancy),
    "bsc": (check_csir_ordering,),
    "bijective": (check_bijective_bounds,),
    "service-optimality": (check_erasure_service_dominance,
                           check_bsc_service_dominance),
}


def run_suite(suite, seed=None):
    """Run one named suite; returns the list of CheckOutcome results."""
    try:
        checks = SUITES[suite]
    except KeyError:
        raise ValueError(f"unknown suite {suite!r}; choose from "
                         f"{', '.join(sorted(SUITES))}") from None
    return [check(seed=seed) for check in checks]
