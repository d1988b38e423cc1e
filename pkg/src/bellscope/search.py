"""Random-restart search over unitaries for circuits that split the Bell basis finely.

Each restart starts from a Haar sample and hill-climbs with proposals
``exp(i eps H) U`` for random Hermitian ``H``.  A generic unitary gives every
Bell state every outcome, so exact zeros are never hit by random moves alone.
After the climb, a polish step picks a target grouping of the states and
drives the cross-class amplitudes to zero by least squares over a Hermitian
generator.  Targets come from clustering the output distributions into k
groups, k counting down from the limit, then from thresholding the
probabilities at a ladder of levels.  A polished unitary is kept only if its
exact class count improves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.linalg import expm
from scipy.spatial.distance import squareform

from ._parallel import parallel_map, worker_count
from .bell import bell_basis, bell_labels
from .circuits import (
    CircuitSpec,
    DeviceSpec,
    GroupTag,
    _matrix_to_json,
    classify_group,
    haar_random_unitary,
)
from .criteria import limits
from .detection import SUPPORT_TOL, _components
from .errors import ConsistencyError, DimensionError
from .fock import Statistics, Unitary, as_statistics, dense_vectors, output_patterns, transfer_array

MAX_SEARCH_MODES = 16
MAX_SEARCH_PHOTONS = 4
POLISH_LADDER = (0.2, 0.1, 3e-2, 1e-2, 1e-3, 1e-5)


@dataclass(frozen=True)
class SearchConfig:
    n: int
    D: int
    statistics: Statistics = Statistics.BOSON
    budget: int = 500
    restarts: int = 25
    step_scale: float = 0.5
    seed: int = 0
    target: int | None = None
    identity_start: bool = False
    polish: bool = True

    def __post_init__(self):
        object.__setattr__(self, "statistics", as_statistics(self.statistics))
        if self.n < 2 or self.D < 2:
            raise DimensionError("need n >= 2 and D >= 2")
        if self.n * self.D > MAX_SEARCH_MODES or self.n > MAX_SEARCH_PHOTONS:
            raise DimensionError(f"search is limited to n <= {MAX_SEARCH_PHOTONS} and nD <= {MAX_SEARCH_MODES}")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.budget < self.restarts and not (self.identity_start and self.budget == 0):
            raise ValueError("budget must be at least the number of restarts")
        if not 0 < self.step_scale <= 1:
            raise ValueError("step_scale must lie in (0, 1]")


@dataclass(frozen=True)
class SearchResult:
    best_unitary: Unitary
    best_classes: int
    best_singletons: int
    group: GroupTag
    trace: tuple[tuple[int, int], ...]
    evaluations: int
    converged: bool
    config: SearchConfig
    best_restart: int = 0
    classes: tuple[tuple[int, ...], ...] = field(default=(), repr=False)

    def to_circuit(self) -> tuple[CircuitSpec, dict]:
        """The best unitary as a one-device circuit, plus its provenance block."""
        cfg = self.config
        dim = self.best_unitary.dim
        device = DeviceSpec(
            "CustomUnitary",
            (tuple(range(dim)),),
            {"matrix": _matrix_to_json(self.best_unitary.matrix)},
        )
        spec = CircuitSpec(
            dim, cfg.n, cfg.statistics, (device,), name=f"search_{cfg.n}x{cfg.D}_seed{cfg.seed}"
        )
        provenance = {
            "seed": cfg.seed,
            "budget": cfg.budget,
            "restarts": cfg.restarts,
            "step_scale": cfg.step_scale,
            "evaluations": self.evaluations,
            "best_classes": self.best_classes,
            "best_singletons": self.best_singletons,
            "best_restart": self.best_restart,
            "group": self.group.group,
            "converged": self.converged,
            "trace": [list(t) for t in self.trace],
        }
        return spec, provenance


class BellModel:
    """Bell-basis outcome amplitudes as a fast function of a raw unitary array."""

    def __init__(self, n: int, D: int, statistics=Statistics.BOSON):
        self.n, self.D = n, D
        self.statistics = as_statistics(statistics)
        self.labels = bell_labels(n, D)
        states = bell_basis(n, D, self.statistics)
        self.basis, self.coeffs = dense_vectors(states)
        self.patterns = output_patterns(n * D, n, self.statistics)
        self._replacements()

    def amplitudes(self, matrix: np.ndarray) -> np.ndarray:
        return (transfer_array(matrix, self.basis, self.patterns, self.statistics) @ self.coeffs).T

    def score(self, matrix: np.ndarray, tol: float = SUPPORT_TOL):
        """Lexicographic objective (classes, singletons, separation) and the classes."""
        probs = np.abs(self.amplitudes(matrix)) ** 2
        classes = _components(probs > tol)
        singles = sum(1 for c in classes if len(c) == 1)
        root = np.sqrt(probs).sum(axis=0)
        # sum over state pairs of the Bhattacharyya overlap, negated
        separation = -0.5 * (float((root**2).sum()) - len(self.labels))
        return (len(classes), singles, separation), classes, probs

    def _replacements(self):
        """For pattern x, slot a and mode c: where x with x_a -> c lands, and its weight."""
        n, m = self.n, self.n * self.D
        index = {p: i for i, p in enumerate(self.patterns)}
        norm = {p: math.sqrt(_occupation(p)) for p in self.patterns}
        fermion = self.statistics is Statistics.FERMION
        X = len(self.patterns)
        self._rep_index = np.zeros((X, n, m), dtype=int)
        self._rep_weight = np.zeros((X, n, m))
        for i, x in enumerate(self.patterns):
            for a in range(n):
                for c in range(m):
                    y = list(x)
                    y[a] = c
                    if fermion:
                        if len(set(y)) < n:
                            continue
                        order = sorted(range(n), key=lambda k: y[k])
                        weight = float(_parity(order))
                    else:
                        weight = 1.0
                    key = tuple(sorted(y))
                    self._rep_index[i, a, c] = index[key]
                    self._rep_weight[i, a, c] = weight * norm[key] / norm[x]
        self._slot_mode = np.array(self.patterns, dtype=int)

    def generator_jacobian(self, amps: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """d amps[rows, cols] / d h for U -> exp(i H(h)) U at h = 0.

        An amplitude is multilinear in the rows of U it reads, and the
        perturbation dU = i dH U replaces row s by sum_c dH[s, c] U[c], so the
        derivative is a sum of amplitudes with one output slot re-pointed.
        Fermionic slots pick up the parity of the re-sorting.
        """
        m = self.n * self.D
        grad = np.zeros((len(rows), m, m), dtype=complex)
        at = np.arange(len(rows))
        for a in range(self.n):
            src = self._rep_index[cols, a, :]
            w = self._rep_weight[cols, a, :]
            grad[at, self._slot_mode[cols, a], :] += 1j * amps[rows[:, None], src] * w
        iu = np.triu_indices(m, 1)
        diag = grad[:, np.arange(m), np.arange(m)]
        re = grad[:, iu[0], iu[1]] + grad[:, iu[1], iu[0]]
        im = 1j * (grad[:, iu[0], iu[1]] - grad[:, iu[1], iu[0]])
        return np.concatenate([diag, re, im], axis=1)


def _occupation(p) -> int:
    out = 1
    for k in set(p):
        out *= math.factorial(p.count(k))
    return out


def _parity(order) -> int:
    sign, seen = 1, set()
    for i in range(len(order)):
        if i in seen:
            continue
        j, length = i, 0
        while j not in seen:
            seen.add(j)
            j = order[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _hermitian(h: np.ndarray, m: int) -> np.ndarray:
    iu = np.triu_indices(m, 1)
    k = len(iu[0])
    H = np.zeros((m, m), dtype=complex)
    H[np.diag_indices(m)] = h[:m]
    H[iu] = h[m : m + k] + 1j * h[m + k :]
    return H + np.triu(H, 1).conj().T


def _project_unitary(matrix: np.ndarray) -> np.ndarray:
    w, _, vh = np.linalg.svd(matrix)
    return w @ vh


def cluster_classes(probs: np.ndarray, k: int) -> list[tuple[int, ...]]:
    """Group states into at most k clusters by overlap of their distributions."""
    root = np.sqrt(probs)
    dist = np.clip(1.0 - root @ root.T, 0.0, None)
    np.fill_diagonal(dist, 0.0)
    tree = linkage(squareform(dist, checks=False), method="average")
    ids = fcluster(tree, k, criterion="maxclust")
    groups: dict[int, list[int]] = {}
    for i, g in enumerate(ids):
        groups.setdefault(g, []).append(i)
    return sorted((tuple(g) for g in groups.values()), key=lambda g: g[0])


MAX_PAIR_RESIDUALS = 6000


def _assignment_residuals(model, amps, label):
    """Amplitudes of each state on the patterns owned by other classes."""
    probs = np.abs(amps) ** 2
    weight = np.zeros((label.max() + 1, probs.shape[1]))
    np.add.at(weight, label, probs)
    owner = np.argmax(weight, axis=0)
    rows, cols = np.nonzero(label[:, None] != owner[None, :])

    def residual(a):
        return a[rows, cols]

    def jacobian(a):
        return model.generator_jacobian(a, rows, cols)

    return residual, jacobian


def _pair_residuals(model, amps, label):
    """Products A_i(x) A_j(x) over cross-class pairs; zero iff supports are disjoint."""
    probs = np.abs(amps) ** 2
    i, j = np.nonzero(label[:, None] < label[None, :])
    i, j = np.concatenate([i, j[label[j] < label[i]]]), np.concatenate([j, i[label[j] < label[i]]])
    keep = label[i] != label[j]
    i, j = i[keep], j[keep]
    mass = np.sqrt(probs[i][:, :, None] * probs[j][:, :, None])[..., 0]
    flat = np.argsort(mass, axis=None)[::-1][:MAX_PAIR_RESIDUALS]
    pair, x = np.unravel_index(flat, mass.shape)
    ri, rj = i[pair], j[pair]

    def residual(a):
        return a[ri, x] * a[rj, x]

    def jacobian(a):
        gi = model.generator_jacobian(a, ri, x)
        gj = model.generator_jacobian(a, rj, x)
        return a[rj, x][:, None] * gi + a[ri, x][:, None] * gj

    return residual, jacobian


def polish(model: BellModel, matrix: np.ndarray, target, iterations: int = 60, pairs: bool = False) -> np.ndarray:
    """Drive the outcome overlap between the classes of ``target`` to zero.

    ``target`` is either a list of state groups or a probability threshold
    whose support components become the groups.  By default each pattern is
    assigned to the group with the most weight on it and the other groups'
    amplitudes there are the residuals; with ``pairs`` the residuals are the
    products of amplitudes of states in different groups, which leaves the
    assignment free.  Damped Gauss-Newton steps ``U -> exp(i H) U`` keep U
    exactly unitary.
    """
    m = matrix.shape[0]
    amps = model.amplitudes(matrix)
    probs = np.abs(amps) ** 2
    classes = _components(probs > target) if np.isscalar(target) else list(target)
    if len(classes) < 2:
        return matrix
    label = np.empty(probs.shape[0], dtype=int)
    for k, c in enumerate(classes):
        label[list(c)] = k
    residual, jacobian = (_pair_residuals if pairs else _assignment_residuals)(model, amps, label)
    u = matrix
    cost = float(np.sum(np.abs(residual(amps)) ** 2))
    damping = 1e-3
    for _ in range(iterations):
        if cost < 1e-30:
            break
        jac = jacobian(amps)
        res = residual(amps)
        jr = np.concatenate([jac.real, jac.imag])
        rr = np.concatenate([res.real, res.imag])
        normal = jr.T @ jr
        rhs = -jr.T @ rr
        scale = np.diag(np.diag(normal) + 1e-12)
        while damping < 1e12:
            step = np.linalg.solve(normal + damping * scale, rhs)
            cand = expm(1j * _hermitian(step, m)) @ u
            cand_amps = model.amplitudes(cand)
            cand_cost = float(np.sum(np.abs(residual(cand_amps)) ** 2))
            if cand_cost < cost:
                u, amps, cost = cand, cand_amps, cand_cost
                damping = max(damping / 3, 1e-12)
                break
            damping *= 4
        else:
            break
    return _project_unitary(u)


def _run_restart(model: BellModel, cfg: SearchConfig, index: int, steps: int):
    """One seeded restart; returns (score, matrix, classes, local trace, evaluations)."""
    rng = np.random.default_rng(cfg.seed + index)
    m = cfg.n * cfg.D
    if cfg.identity_start and index == 0:
        u = np.eye(m, dtype=complex)
    else:
        u = haar_random_unitary(m, rng).matrix
    score, classes, _ = model.score(u)
    # a zero budget only scores the start, which is not counted as a search step
    evals = 1 if steps else 0
    trace = [(evals, score[0])]
    bound = limits(cfg.n, cfg.D).n1
    eps, rejected, accepted = cfg.step_scale, 0, 0

    def climb(limit):
        nonlocal u, score, classes, evals, eps, rejected, accepted
        while evals < limit and eps >= 1e-4:
            h = _hermitian(rng.standard_normal(m * m), m)
            h /= np.linalg.norm(h)
            cand = expm(1j * eps * h) @ u
            cand_score, cand_classes, _ = model.score(cand)
            evals += 1
            if cand_score > score:
                u, score, classes = cand, cand_score, cand_classes
                rejected = 0
                accepted += 1
                if accepted % 50 == 0:
                    u = _project_unitary(u)
            else:
                rejected += 1
                if rejected >= 20:
                    eps *= 0.8
                    rejected = 0
            trace.append((evals, score[0]))

    if not steps or not cfg.polish:
        climb(steps)
        return score, u, classes, trace, evals
    # half the budget climbs, the rest alternates polish rounds and short climbs
    climb(max(1, steps // 2))
    ladder = list(POLISH_LADDER)
    while evals < steps:
        probs = np.abs(model.amplitudes(u)) ** 2
        targets = [cluster_classes(probs, k) for k in range(min(bound, len(model.labels)), score[0], -1)]
        improved = False
        for target, pairs in [(t, False) for t in targets + ladder] + [(t, True) for t in targets]:
            if evals >= steps:
                break
            cand = polish(model, u, target, pairs=pairs)
            cand_score, cand_classes, _ = model.score(cand)
            evals += 1
            trace.append((evals, max(score[0], cand_score[0])))
            if cand_score[:2] > score[:2]:
                u, score, classes = cand, cand_score, cand_classes
                improved = True
                break
        if score[0] >= (cfg.target or bound):
            break
        if not improved:
            # nothing polished: move on with a fresh climb from a rescaled step
            eps = max(eps, cfg.step_scale / 4)
            before = evals
            climb(min(steps, evals + max(1, steps // 4)))
            if evals == before:
                break
    return score, u, classes, trace, evals


def maximize_classes(cfg: SearchConfig) -> SearchResult:
    """Best class count found within the evaluation budget.

    Restarts own independent streams seeded ``seed + index`` and run in
    parallel batches; the winner is the best score, ties going to the lower
    restart index, so the result does not depend on the thread count.
    """
    model = BellModel(cfg.n, cfg.D, cfg.statistics)
    share, extra = divmod(cfg.budget, cfg.restarts)
    budgets = [share + (1 if i < extra else 0) for i in range(cfg.restarts)]
    if cfg.identity_start and cfg.budget == 0:
        budgets = [0]
    bound = limits(cfg.n, cfg.D).n1
    goal = cfg.target

    best = None
    trace: list[tuple[int, int]] = []
    used = 0
    batch = max(1, worker_count())
    done = False
    for start in range(0, len(budgets), batch):
        idx = list(range(start, min(start + batch, len(budgets))))
        runs = parallel_map(lambda i: _run_restart(model, cfg, i, budgets[i]), idx)
        for i, (score, u, classes, local, evals) in zip(idx, runs):
            for e, c in local:
                so_far = max(c, trace[-1][1] if trace else c)
                trace.append((used + e, so_far))
            used += evals
            if best is None or score > best[0]:
                best = (score, u, classes, i)
            if goal is not None and best[0][0] >= goal:
                done = True
                break
        if done:
            break

    score, u, classes, index = best
    unitary = Unitary(_project_unitary(u))
    group = classify_group(unitary, cfg.n, cfg.D, cfg.statistics)
    if group.group == "G1" and score[0] > bound:
        raise ConsistencyError(
            f"G1 unitary splits the basis into {score[0]} classes, above the limit {bound}"
        )
    compact = [trace[0]] if trace else []
    for t in trace[1:]:
        if t[1] != compact[-1][1]:
            compact.append(t)
    if trace and compact[-1] != trace[-1]:
        compact.append(trace[-1])
    converged = score[0] >= (goal if goal is not None else bound)
    return SearchResult(
        unitary,
        score[0],
        score[1],
        group,
        tuple(compact),
        used,
        converged,
        cfg,
        index,
        tuple(classes),
    )


# --- bound audit ----------------------------------------------------------------


@dataclass(frozen=True)
class AuditReport:
    n: int
    D: int
    statistics: Statistics
    samples: int
    seed: int
    bound: int
    histogram: dict[int, int]
    g1_histogram: dict[int, int]
    g1_count: int
    max_g1_classes: int
    violations: int
    repeated_detector_patterns: int

    @property
    def g1_fraction(self) -> float:
        return self.g1_count / self.samples if self.samples else 0.0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "D": self.D,
            "statistics": self.statistics.value,
            "samples": self.samples,
            "seed": self.seed,
            "bound": self.bound,
            "histogram": {str(k): v for k, v in self.histogram.items()},
            "g1_histogram": {str(k): v for k, v in self.g1_histogram.items()},
            "g1_count": self.g1_count,
            "g1_fraction": self.g1_fraction,
            "max_g1_classes": self.max_g1_classes,
            "violations": self.violations,
            "repeated_detector_patterns": self.repeated_detector_patterns,
        }


def bound_audit(n: int, D: int, statistics=Statistics.BOSON, samples: int = 200, seed: int = 0) -> AuditReport:
    """Class counts of seeded Haar unitaries; a G1 sample above nD-(n-1) is fatal."""
    stats = as_statistics(statistics)
    if n * D > MAX_SEARCH_MODES:
        raise DimensionError(f"audit is limited to nD <= {MAX_SEARCH_MODES}")
    model = BellModel(n, D, stats)
    bound = limits(n, D).n1
    bunched = np.array([len(set(p)) != len(p) for p in model.patterns])

    def one(k):
        u = haar_random_unitary(n * D, seed + k)
        (count, _, _), _, probs = model.score(u.matrix)
        tag = classify_group(u, n, D, stats)
        repeats = int((probs[:, bunched] > SUPPORT_TOL).any(axis=1).sum()) if bunched.any() else 0
        return count, tag.group, repeats

    results = parallel_map(one, range(samples))
    hist: dict[int, int] = {}
    g1_hist: dict[int, int] = {}
    for count, group, _ in results:
        hist[count] = hist.get(count, 0) + 1
        if group == "G1":
            g1_hist[count] = g1_hist.get(count, 0) + 1
    violations = sum(c for k, c in g1_hist.items() if k > bound)
    report = AuditReport(
        n,
        D,
        stats,
        samples,
        seed,
        bound,
        dict(sorted(hist.items())),
        dict(sorted(g1_hist.items())),
        sum(g1_hist.values()),
        max(g1_hist, default=0),
        violations,
        sum(r for _, _, r in results),
    )
    if violations:
        raise ConsistencyError(f"{violations} G1 samples exceed the limit {bound}: {report.to_dict()}")
    return report


def channel_capacity(classes: int) -> float:
    return math.log2(classes) if classes > 0 else 0.0
