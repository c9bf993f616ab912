"""End-to-end Monte Carlo transmission and empirical capacity estimation.

A transcript is one realization of the whole system: Poisson arrivals queue up
for a single server, each symbol's delay drives its channel noise, and the
received sequence is recorded alongside the timing. The estimators here are
the ground truth every closed form in qcl.capacity is checked against.
"""

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .capacity import QueueChannelSpec, erasure_capacity
from .channels import (ERASED, BinarySymmetric, DecoherenceModel, Erasure,
                       RandomBijective, alphabet_size, apply_channel,
                       binary_entropy, discrete_entropy)
from .numerics import batch_means, spawn_rngs
from .queueing import (DelayConvention, Exponential, PoissonArrivals,
                       lindley_waits, stationary_wait_samples)


@dataclass(frozen=True)
class EstimateWithError:
    """A Monte Carlo estimate with its standard error and sample count."""

    value: float
    std_error: float
    n: int
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("std_error must be nonnegative")
        if self.n < 1:
            raise ValueError("n must be at least 1")


@dataclass(frozen=True)
class Transcript:
    """Per-symbol record of one simulated transmission.

    Columns: input symbol x, arrival time a, departure time d, service time s,
    delay w (under the spec's convention), output symbol y.
    """

    x: np.ndarray
    a: np.ndarray
    d: np.ndarray
    s: np.ndarray
    w: np.ndarray
    y: np.ndarray
    spec: QueueChannelSpec
    seed: object = None

    def __len__(self):
        return self.x.size

    @property
    def lam(self):
        return self.spec.lam

    def to_csv(self, path_or_file):
        """Write `index,x,a,d,s,w,y` rows; ERASED symbols render as `?`.

        Floats are written with repr (shortest round-trip), so files are
        bit-identical across runs with the same seed.
        """
        own = not hasattr(path_or_file, "write")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            writer = csv.writer(fh)
            writer.writerow(["index", "x", "a", "d", "s", "w", "y"])
            for i in range(len(self)):
                y = int(self.y[i])
                writer.writerow([i, int(self.x[i]), repr(float(self.a[i])),
                                 repr(float(self.d[i])), repr(float(self.s[i])),
                                 repr(float(self.w[i])),
                                 "?" if y == ERASED else y])
        finally:
            if own:
                fh.close()


def simulate_transmission(spec, n, seed=None):
    """Push n i.i.d. uniform input symbols through the queue channel.

    The queue starts empty; waits follow the Lindley recursion, and each
    output is drawn by the channel at that symbol's realized delay. Three
    independent substreams (queue, inputs, channel noise) are split from the
    seed, so the draw order is stable across versions.
    """
    spec.check_stable()
    if n < 0:
        raise ValueError("n must be nonnegative")
    queue_rng, input_rng, noise_rng = spawn_rngs(seed, 3)
    k = alphabet_size(spec.channel)
    if n == 0:
        empty = np.empty(0)
        return Transcript(x=np.empty(0, dtype=int), a=empty, d=empty, s=empty,
                          w=empty, y=np.empty(0, dtype=int), spec=spec, seed=seed)
    t = spec.arrival.sample_interarrival(queue_rng, size=n)
    s = np.asarray(spec.service.sample(queue_rng, size=n), dtype=float)
    a = np.cumsum(t)
    wq = lindley_waits(s, t)
    d = a + wq + s
    if spec.delay_convention is DelayConvention.SOJOURN:
        w = wq + s
    else:
        w = wq
    x = input_rng.integers(0, k, size=n)
    y = apply_channel(spec.channel, x, w, noise_rng)
    return Transcript(x=x, a=a, d=d, s=s, w=w, y=np.asarray(y, dtype=int),
                      spec=spec, seed=seed)


def estimate_erasure_capacity(transcript):
    """Plug-in erasure capacity lam * log2(k) * (1 - erased fraction).

    The standard error is batch-means (the erased indicators inherit the
    delay autocorrelation); the i.i.d. binomial error is kept in details.
    """
    if not isinstance(transcript.spec.channel, Erasure):
        raise TypeError("estimate_erasure_capacity needs an erasure transcript")
    n = len(transcript)
    if n == 0:
        raise ValueError("empty transcript")
    survived = (transcript.y != ERASED).astype(float)
    mean, se, m = batch_means(survived)
    scale = transcript.lam * math.log2(alphabet_size(transcript.spec.channel))
    frac = survived.mean()
    binomial_se = scale * math.sqrt(max(frac * (1.0 - frac), 0.0) / n)
    return EstimateWithError(value=scale * mean, std_error=scale * se, n=n,
                             details={"erased_fraction": 1.0 - frac,
                                      "binomial_std_error": binomial_se,
                                      "batches": m})


def stratified_erasure_capacity(transcript, buckets=64):
    """Erasure capacity re-estimated with per-delay-bucket erasure fractions.

    Conditions on the realized delays (quantile buckets), then reassembles
    sum over buckets of lam*log2(k)*(1 - p_hat(bucket))*freq(bucket). The sum
    telescopes to the plain erased-count estimate, which is exactly the point:
    knowing the delays does not move the erasure capacity estimate.
    """
    if not isinstance(transcript.spec.channel, Erasure):
        raise TypeError("needs an erasure transcript")
    n = len(transcript)
    if n == 0:
        raise ValueError("empty transcript")
    idx = _quantile_buckets(transcript.w, buckets)
    survived = (transcript.y != ERASED).astype(float)
    counts = np.bincount(idx, minlength=buckets).astype(float)
    ok = np.bincount(idx, weights=survived, minlength=buckets)
    occupied = counts > 0
    surv_frac = np.zeros_like(counts)
    surv_frac[occupied] = ok[occupied] / counts[occupied]
    freq = counts / n
    scale = transcript.lam * math.log2(alphabet_size(transcript.spec.channel))
    value = scale * float((surv_frac * freq).sum())
    _, se, _ = batch_means(survived)
    return EstimateWithError(value=value, std_error=scale * se, n=n,
                             details={"buckets": int(occupied.sum())})


def estimate_expectation_over_pi(f, spec, n, burn_in=None, seed=None):
    """Batch-means estimate of E[f(W)] over the stationary delay law."""
    waits = stationary_wait_samples(spec.arrival, spec.service, n,
                                    burn_in=burn_in, seed=seed,
                                    convention=spec.delay_convention)
    values = np.asarray(f(waits.samples), dtype=float)
    if values.shape != waits.samples.shape:
        raise ValueError("f must map the wait array elementwise")
    mean, se, m = batch_means(values)
    return EstimateWithError(value=mean, std_error=se, n=int(values.size),
                             details={"batches": m, "burn_in": waits.burn_in})


def estimate_bsc_capacity(transcript, csir):
    """Plug-in binary-symmetric capacity from the transcript's delays.

    Reads the flip law at the realized delays (not the realized flips, whose
    extra randomness the plug-in integrates out). csir=True gives
    lam*(1 - mean H(phi(w_j))); csir=False gives lam*(1 - H(mean phi(w_j)))
    with a delta-method standard error through the entropy slope.
    """
    if not isinstance(transcript.spec.channel, BinarySymmetric):
        raise TypeError("estimate_bsc_capacity needs a binary symmetric transcript")
    n = len(transcript)
    if n == 0:
        raise ValueError("empty transcript")
    lam = transcript.lam
    phi = transcript.spec.channel.flip.flip_prob(transcript.w)
    if csir:
        mean_h, se_h, m = batch_means(binary_entropy(phi))
        return EstimateWithError(value=lam * (1.0 - mean_h), std_error=lam * se_h,
                                 n=n, details={"batches": m})
    mean_phi, se_phi, m = batch_means(phi)
    if 0.0 < mean_phi < 1.0:
        slope = abs(math.log2((1.0 - mean_phi) / mean_phi))
    else:
        slope = 0.0
    return EstimateWithError(value=lam * (1.0 - binary_entropy(mean_phi)),
                             std_error=lam * slope * se_phi, n=n,
                             details={"batches": m, "mean_flip": mean_phi})


def _quantile_buckets(w, buckets):
    """Assign each delay to one of `buckets` near-equal-count bins."""
    edges = np.quantile(w, np.linspace(0.0, 1.0, buckets + 1)[1:-1])
    return np.searchsorted(edges, w, side="right")


def estimate_bijective_bounds(spec, n, burn_in=None, seed=None, buckets=64):
    """Estimate the no-timing capacity bounds and the exact timing-aware value
    for a noise-permutation channel.

    Returns (lower, upper, csir_exact) as EstimateWithError:
      - csir_exact: lam*(log2 k - mean of per-delay noise entropies);
      - lower: lam*(log2 k - H(delay-averaged noise law));
      - upper: lam*(log2 k - mean entropy of one-step-ahead averaged noise),
        where the one-step kernel is estimated from consecutive Lindley delay
        pairs bucketed into delay quantiles.

    By entropy concavity lower <= upper holds sample-by-sample, not just in
    expectation.
    """
    if not isinstance(spec.channel, RandomBijective):
        raise TypeError("estimate_bijective_bounds needs a RandomBijective channel")
    spec.check_stable()
    if n < 2:
        raise ValueError("need at least two samples for the one-step kernel")
    waits = stationary_wait_samples(spec.arrival, spec.service, n,
                                    burn_in=burn_in, seed=seed,
                                    convention=spec.delay_convention)
    w = waits.samples
    lam = spec.lam
    log_k = math.log2(alphabet_size(spec.channel))
    probs = spec.channel.noise_dist(w)

    def capacity_estimate(entropies_or_value, se, count, extra=None):
        return EstimateWithError(value=lam * (log_k - entropies_or_value),
                                 std_error=lam * se, n=count,
                                 details=extra or {})

    # timing-aware: average the per-delay noise entropies
    h_each = discrete_entropy(probs)
    mean_h, se_h, _ = batch_means(h_each)
    csir_exact = capacity_estimate(mean_h, se_h, n)

    # successors: noise laws at W_1..W_{n-1}, used by both remaining estimators
    succ = probs[1:]
    mean_dist = succ.mean(axis=0)
    h_lower = discrete_entropy(mean_dist)
    m = max(2, int(math.isqrt(succ.shape[0])))
    nb = succ.shape[0] // m
    if nb >= 2:
        batch_dists = succ[: nb * m].reshape(nb, m, -1).mean(axis=1)
        se_lower = float(discrete_entropy(batch_dists).std(ddof=1) / math.sqrt(nb))
    else:
        se_lower = 0.0
    lower = capacity_estimate(h_lower, se_lower, n - 1)

    # one-step kernel: average successor noise laws within delay buckets
    idx = _quantile_buckets(w[:-1], buckets)
    counts = np.bincount(idx, minlength=buckets).astype(float)
    sums = np.stack([np.bincount(idx, weights=succ[:, j], minlength=buckets)
                     for j in range(probs.shape[1])], axis=1)
    occupied = counts > 0
    kernel_dists = np.zeros_like(sums)
    kernel_dists[occupied] = sums[occupied] / counts[occupied, None]
    h_bucket = np.zeros(buckets)
    h_bucket[occupied] = discrete_entropy(kernel_dists[occupied])
    h_kernel_each = h_bucket[idx]
    mean_hk, se_hk, _ = batch_means(h_kernel_each)
    upper = capacity_estimate(mean_hk, se_hk, n - 1,
                              extra={"buckets": int(occupied.sum())})
    return lower, upper, csir_exact


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of one formula-versus-simulation comparison."""

    formula_value: float
    estimate: float
    std_error: float
    sigma_distance: float
    tolerance_sigma: float
    passed: bool

    def __str__(self):
        mark = "pass" if self.passed else "FAIL"
        return (f"{mark}: formula {self.formula_value:.6g} vs estimate "
                f"{self.estimate:.6g} +/- {self.std_error:.2g} "
                f"({self.sigma_distance:.2f} sigma, gate {self.tolerance_sigma:g})")


def validate_formula(formula_value, estimate, tolerance_sigma=4.0):
    """Compare a closed-form value against a Monte Carlo estimate.

    Passes when |estimate - formula| <= tolerance_sigma * std_error; a
    zero-variance estimate must match exactly.
    """
    value = float(getattr(estimate, "value", estimate))
    se = float(getattr(estimate, "std_error", 0.0))
    diff = abs(value - formula_value)
    if se == 0.0:
        passed = diff == 0.0
        sigma = 0.0 if passed else math.inf
    else:
        sigma = diff / se
        passed = sigma <= tolerance_sigma
    return ValidationReport(formula_value=float(formula_value), estimate=value,
                            std_error=se, sigma_distance=sigma,
                            tolerance_sigma=tolerance_sigma, passed=passed)


def sweep_rows(lambdas, kappas, n=0, seed=None, service=None, alphabet=2,
               convention=DelayConvention.WAITING_BEFORE_SERVICE, jobs=None):
    """Capacity grid for the exponential-decoherence erasure family.

    Returns one dict per stable (kappa, lambda) grid point with keys
    `lambda`, `kappa`, `capacity_analytic`, `capacity_mc`, `mc_stderr`; the
    Monte Carlo cells stay None when n == 0. Arrival rates at or past the
    stability boundary are dropped with a warning. Rows iterate kappas outer
    and lambdas inner, both in the order given. Each Monte Carlo cell has its
    own child seed keyed to its grid index, so cells can be evaluated on a
    thread pool (jobs > 1) with results identical to the serial order.
    """
    service = Exponential(1.0) if service is None else service
    mu = 1.0 / service.mean
    kept = [float(lam) for lam in lambdas if 0.0 <= lam < mu]
    dropped = [float(lam) for lam in lambdas if not 0.0 <= lam < mu]
    if dropped:
        warnings.warn(f"dropping arrival rates outside the stability region "
                      f"(mu = {mu:g}): {dropped}", stacklevel=2)
    rows = []
    specs = []
    for kappa in kappas:
        for lam in kept:
            if lam == 0.0:
                analytic, spec = 0.0, None
            else:
                spec = QueueChannelSpec(
                    arrival=PoissonArrivals(lam), service=service,
                    channel=Erasure(DecoherenceModel.exponential(kappa), alphabet),
                    delay_convention=convention)
                analytic = erasure_capacity(spec).bits_per_sec
            specs.append(spec)
            rows.append({"lambda": lam, "kappa": float(kappa),
                         "capacity_analytic": analytic, "capacity_mc": None,
                         "mc_stderr": None})
    if n > 0 and rows:
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        children = ss.spawn(len(rows))

        def mc_cell(i):
            if specs[i] is None:
                return 0.0, 0.0
            est = estimate_erasure_capacity(
                simulate_transmission(specs[i], n, seed=children[i]))
            return est.value, est.std_error

        if jobs is not None and jobs > 1:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                cells = list(pool.map(mc_cell, range(len(rows))))
        else:
            cells = [mc_cell(i) for i in range(len(rows))]
        for row, (value, stderr) in zip(rows, cells):
            row["capacity_mc"], row["mc_stderr"] = value, stderr
    return rows
