"""Sparse symmetric matrices, Z/M-matrix classification, and the random band ensemble.

Storage convention: indices are 1-based at the API surface, matching the
conventions used in every file format and report this package emits.  The
diagonal is stored explicitly for every index (zeros included); off-diagonal
entries are stored once per unordered pair {i, j} and must be non-zero.
Instances are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

__all__ = [
    "SparseSymMatrix",
    "MatrixClass",
    "EnsembleConfig",
    "MatrixFormatError",
    "NotPositiveDefiniteError",
    "NonPositiveLandscapeError",
    "connectivity",
    "classify",
    "generate_band_ensemble",
    "shift_to_epsilon",
    "restrict",
    "read_matrix",
    "write_matrix",
]

# Everything here goes through dense symmetric eigensolves at some point;
# beyond this order the quadratic storage and cubic solves are out of scope.
DENSE_EIGEN_LIMIT = 5000

# |lambda_min| at or below this is treated as numerically singular.
NEAR_SINGULAR_TOL = 1e-12

MM_HEADER = "%%MatrixMarket matrix coordinate real symmetric"


class MatrixFormatError(ValueError):
    """A matrix file cannot be parsed or violates its declared format."""


class NotPositiveDefiniteError(ArithmeticError):
    """A solve required positive definiteness and the matrix lacks it."""


class NonPositiveLandscapeError(ArithmeticError):
    """A landscape vector has an entry that is zero or negative."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class SparseSymMatrix:
    """Real symmetric N x N matrix in symmetric sparse storage.

    Construct with the full diagonal (length n) and an iterable of
    off-diagonal triples ``(i, j, value)`` with 1 <= i, j <= n, i != j.
    Triples may come in either orientation; they are normalized to i < j.
    Zero off-diagonal values are dropped as structural zeros.
    """

    __slots__ = ("_n", "_diag", "_off_i", "_off_j", "_off_v", "_adj", "_lookup")

    def __init__(self, n: int, diag, off_entries: Iterable[tuple] = ()):
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise ValueError(f"matrix dimension must be a positive integer, got {n!r}")
        diag = np.array(diag, dtype=float)
        if diag.shape != (n,):
            raise ValueError(f"diagonal must have length {n}, got shape {diag.shape}")
        if not np.all(np.isfinite(diag)):
            raise ValueError("diagonal entries must be finite")

        seen: dict[tuple[int, int], float] = {}
        for i, j, v in off_entries:
            i = int(i)
            j = int(j)
            if not (1 <= i <= n and 1 <= j <= n):
                raise ValueError(f"entry ({i}, {j}) outside [1, {n}]")
            if i == j:
                raise ValueError(f"diagonal entry ({i}, {i}) passed as off-diagonal")
            v = float(v)
            if not math.isfinite(v):
                raise ValueError(f"entry ({i}, {j}) is not finite")
            if v == 0.0:
                continue
            key = (i, j) if i < j else (j, i)
            if key in seen:
                raise ValueError(f"duplicate off-diagonal entry for pair {key}")
            seen[key] = v

        keys = sorted(seen)
        self._n = int(n)
        self._diag = _frozen(diag)
        self._off_i = _frozen(np.array([k[0] for k in keys], dtype=np.int64))
        self._off_j = _frozen(np.array([k[1] for k in keys], dtype=np.int64))
        self._off_v = _frozen(np.array([seen[k] for k in keys], dtype=float))
        self._adj = None
        self._lookup = None

    @classmethod
    def from_entries(cls, n: int, entries: Iterable[tuple]) -> "SparseSymMatrix":
        """Build from mixed triples; missing diagonal entries default to 0."""
        diag = np.zeros(n, dtype=float)
        seen_diag = set()
        off = []
        for i, j, v in entries:
            i = int(i)
            j = int(j)
            if i == j:
                if not (1 <= i <= n):
                    raise ValueError(f"entry ({i}, {i}) outside [1, {n}]")
                if i in seen_diag:
                    raise ValueError(f"duplicate diagonal entry for index {i}")
                seen_diag.add(i)
                diag[i - 1] = float(v)
            else:
                off.append((i, j, v))
        return cls(n, diag, off)

    @classmethod
    def from_dense(cls, arr, *, tol: float = 0.0) -> "SparseSymMatrix":
        """Build from a dense square array, symmetrizing only within ``tol``."""
        arr = np.asarray(arr, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"expected a square array, got shape {arr.shape}")
        n = arr.shape[0]
        asym = np.abs(arr - arr.T).max() if n else 0.0
        if asym > tol:
            raise ValueError(f"array is not symmetric (max |a_ij - a_ji| = {asym:g})")
        sym = 0.5 * (arr + arr.T) if tol > 0.0 else arr
        off = []
        for i in range(n):
            for j in range(i + 1, n):
                if sym[i, j] != 0.0:
                    off.append((i + 1, j + 1, sym[i, j]))
        return cls(n, np.diag(sym).copy(), off)

    @property
    def n(self) -> int:
        return self._n

    @property
    def diag(self) -> np.ndarray:
        """The diagonal as a read-only length-n array (0-based positions)."""
        return self._diag

    @property
    def off_count(self) -> int:
        return int(self._off_v.size)

    def off_entries(self) -> Iterator[tuple[int, int, float]]:
        """Yield (i, j, value) with i < j, in lexicographic order."""
        for i, j, v in zip(self._off_i, self._off_j, self._off_v):
            yield int(i), int(j), float(v)

    def off_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Read-only (i, j, value) arrays of the stored off-diagonal pairs."""
        return self._off_i, self._off_j, self._off_v

    def value_at(self, i: int, j: int) -> float:
        """Entry a_ij; unstored off-diagonal pairs read as 0."""
        if not (1 <= i <= self._n and 1 <= j <= self._n):
            raise ValueError(f"index ({i}, {j}) outside [1, {self._n}]")
        if i == j:
            return float(self._diag[i - 1])
        if self._lookup is None:
            self._lookup = {
                (int(a), int(b)): float(v)
                for a, b, v in zip(self._off_i, self._off_j, self._off_v)
            }
        key = (i, j) if i < j else (j, i)
        return self._lookup.get(key, 0.0)

    def neighbors(self, i: int) -> tuple[int, ...]:
        """Indices j != i with a_ij != 0, ascending."""
        return self._adjacency()[i - 1]

    def _adjacency(self):
        if self._adj is None:
            adj: list[list[int]] = [[] for _ in range(self._n)]
            for i, j in zip(self._off_i, self._off_j):
                adj[i - 1].append(int(j))
                adj[j - 1].append(int(i))
            self._adj = tuple(tuple(sorted(row)) for row in adj)
        return self._adj

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self._n, self._n), dtype=float)
        np.fill_diagonal(out, self._diag)
        ii = self._off_i - 1
        jj = self._off_j - 1
        out[ii, jj] = self._off_v
        out[jj, ii] = self._off_v
        return out

    def matvec(self, x) -> np.ndarray:
        """A @ x without forming the dense matrix."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self._n,):
            raise ValueError(f"vector must have length {self._n}, got shape {x.shape}")
        out = self._diag * x
        ii = self._off_i - 1
        jj = self._off_j - 1
        np.add.at(out, ii, self._off_v * x[jj])
        np.add.at(out, jj, self._off_v * x[ii])
        return out

    def max_abs_entry(self) -> float:
        m = float(np.abs(self._diag).max())
        if self._off_v.size:
            m = max(m, float(np.abs(self._off_v).max()))
        return m

    def bandwidth(self) -> int:
        """max |i - j| over stored off-diagonal entries, 0 if none."""
        if not self._off_v.size:
            return 0
        return int(np.max(self._off_j - self._off_i))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseSymMatrix):
            return NotImplemented
        return (
            self._n == other._n
            and self._diag.tobytes() == other._diag.tobytes()
            and self._off_i.tobytes() == other._off_i.tobytes()
            and self._off_j.tobytes() == other._off_j.tobytes()
            and self._off_v.tobytes() == other._off_v.tobytes()
        )

    def __hash__(self):
        return hash((self._n, self._diag.tobytes(), self._off_v.tobytes()))

    def __repr__(self) -> str:
        return f"SparseSymMatrix(n={self._n}, off_pairs={self.off_count})"


@dataclass(frozen=True)
class MatrixClass:
    """Structural and spectral classification of a SparseSymMatrix.

    ``is_m`` and ``min_eigenvalue`` are None when the spectrum was not computed.
    ``near_singular`` flags |lambda_min| <= 1e-12; such matrices are never
    classified as M-matrices.
    """

    is_z: bool
    is_m: bool | None
    connectivity: int
    min_eigenvalue: float | None
    near_singular: bool = False


@dataclass(frozen=True)
class EnsembleConfig:
    """Parameters of the random band ensemble.

    ``half_bandwidth`` is the number W of non-zero superdiagonals; the graph
    connectivity of a draw is at most 2W.  ``seed`` is a 64-bit unsigned
    integer; equal seeds give bit-identical matrices.
    """

    n: int
    half_bandwidth: int
    epsilon: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not isinstance(self.half_bandwidth, (int, np.integer)) or self.half_bandwidth < 1:
            raise ValueError(f"half_bandwidth must be a positive integer, got {self.half_bandwidth!r}")
        if self.half_bandwidth >= self.n:
            raise ValueError(f"half_bandwidth must be < n, got W={self.half_bandwidth}, n={self.n}")
        if not (float(self.epsilon) > 0.0):
            raise ValueError(f"epsilon must be positive, got {self.epsilon!r}")
        if not isinstance(self.seed, (int, np.integer)) or not (0 <= int(self.seed) < 2**64):
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")


def connectivity(A: SparseSymMatrix) -> int:
    """Maximum over rows of the number of non-zero off-diagonal entries."""
    counts = np.zeros(A.n, dtype=np.int64)
    off_i, off_j, _ = A.off_arrays()
    np.add.at(counts, off_i - 1, 1)
    np.add.at(counts, off_j - 1, 1)
    return int(counts.max()) if A.n else 0


def classify(A: SparseSymMatrix, compute_spectrum: bool = True) -> MatrixClass:
    """Classify a symmetric matrix as Z and (optionally) M.

    Z: all off-diagonal entries <= 0.  M: Z with lambda_min > 0; a matrix
    with |lambda_min| <= 1e-12 is reported as not-M and near-singular.
    """
    _, _, off_v = A.off_arrays()
    is_z = bool(np.all(off_v <= 0.0)) if off_v.size else True
    conn = connectivity(A)
    if not compute_spectrum:
        return MatrixClass(is_z=is_z, is_m=None, connectivity=conn, min_eigenvalue=None)
    lam_min = smallest_eigenvalue(A)
    near = abs(lam_min) <= NEAR_SINGULAR_TOL
    is_m = bool(is_z and lam_min > 0.0 and not near)
    return MatrixClass(
        is_z=is_z,
        is_m=is_m,
        connectivity=conn,
        min_eigenvalue=lam_min,
        near_singular=near,
    )


def smallest_eigenvalue(A: SparseSymMatrix) -> float:
    if A.n > DENSE_EIGEN_LIMIT:
        raise ValueError(f"dense eigensolve limited to n <= {DENSE_EIGEN_LIMIT}, got n = {A.n}")
    return float(np.linalg.eigvalsh(A.to_dense())[0])


def _substreams(seed: int, count: int) -> list[np.random.Generator]:
    """Independent child generators split off one root seed.

    Stream 0 drives the diagonal; stream k >= 1 drives the k-th superdiagonal.
    """
    root = np.random.SeedSequence(int(seed))
    return [np.random.Generator(np.random.PCG64(child)) for child in root.spawn(count)]

def _standard_normals(gen: np.random.Generator, count: int) -> np.ndarray:
    """Box-Muller transform of PCG64 uniforms.

    Made explicit (rather than Generator.standard_normal) so the draw-to-value
    mapping is pinned by this module, not by the numpy version.
    """
    half = (count + 1) // 2
    u1 = 1.0 - gen.random(half)  # (0, 1]; keeps the log finite
    u2 = gen.random(half)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])
    return z[:count]


def shift_to_epsilon(A0: SparseSymMatrix, epsilon: float) -> tuple[SparseSymMatrix, float]:
    """Return (A0 + a*I, a) with a = epsilon - lambda_min(A0).

    The shift is applied unconditionally, so the smallest eigenvalue of the
    result equals epsilon regardless of the sign of lambda_min(A0).
    """
    if not (float(epsilon) > 0.0):
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    lam0 = smallest_eigenvalue(A0)
    shift = float(epsilon) - lam0
    off_i, off_j, off_v = A0.off_arrays()
    shifted = SparseSymMatrix(A0.n, A0.diag + shift, zip(off_i, off_j, off_v))
    return shifted, shift


def generate_band_ensemble(cfg: EnsembleConfig) -> tuple[SparseSymMatrix, float]:
    """Draw one matrix of the band ensemble; returns (matrix, applied shift).

    Diagonal entries are standard normal; the first W superdiagonals carry
    minus the absolute value of standard normals (so every draw is a
    Z-matrix); all other entries are zero.  The whole matrix is then shifted
    by a = epsilon - lambda_min so its smallest eigenvalue is epsilon.
    Exact-zero draws would be dropped as structural zeros (probability zero).
    """
    n, w = cfg.n, cfg.half_bandwidth
    streams = _substreams(cfg.seed, w + 1)
    diag = _standard_normals(streams[0], n)
    off: list[tuple[int, int, float]] = []
    for k in range(1, w + 1):
        vals = -np.abs(_standard_normals(streams[k], n - k))
        for idx, v in enumerate(vals):
            off.append((idx + 1, idx + 1 + k, float(v)))
    base = SparseSymMatrix(n, diag, off)
    return shift_to_epsilon(base, cfg.epsilon)


def restrict(A: SparseSymMatrix, subset: Iterable[int]) -> SparseSymMatrix:
    """Principal restriction I_M A I_M, keeping the full dimension.

    Entries survive only when both indices lie in ``subset``; everything else
    (the diagonal included) becomes zero.
    """
    keep = set()
    for i in subset:
        i = int(i)
        if not (1 <= i <= A.n):
            raise ValueError(f"index {i} outside [1, {A.n}]")
        keep.add(i)
    diag = np.zeros(A.n, dtype=float)
    for i in keep:
        diag[i - 1] = A.diag[i - 1]
    off = [(i, j, v) for i, j, v in A.off_entries() if i in keep and j in keep]
    return SparseSymMatrix(A.n, diag, off)


def write_matrix(path, A: SparseSymMatrix) -> None:
    """Write in Matrix Market coordinate format (symmetric, lower triangle).

    Values are written with shortest round-tripping decimal repr, so a
    read-back reproduces every finite double bit for bit.
    """
    lines = [MM_HEADER]
    entries: list[tuple[int, int, float]] = []
    for i in range(1, A.n + 1):
        entries.append((i, i, float(A.diag[i - 1])))
    for i, j, v in A.off_entries():
        entries.append((j, i, v))  # lower triangle: row >= column
    entries.sort()
    lines.append(f"{A.n} {A.n} {len(entries)}")
    for i, j, v in entries:
        lines.append(f"{i} {j} {v!r}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_mm_header(line: str, path) -> str:
    parts = line.strip().lower().split()
    if len(parts) != 5 or parts[0] != "%%matrixmarket":
        raise MatrixFormatError(f"{path}: malformed MatrixMarket header: {line.strip()!r}")
    _, obj, fmt, field, symmetry = parts
    if obj != "matrix" or fmt != "coordinate":
        raise MatrixFormatError(f"{path}: only 'matrix coordinate' files are supported")
    if field != "real":
        raise MatrixFormatError(f"{path}: only 'real' entries are supported, got {field!r}")
    if symmetry not in ("symmetric", "general"):
        raise MatrixFormatError(f"{path}: unsupported symmetry {symmetry!r}")
    return symmetry


def read_matrix(path) -> SparseSymMatrix:
    """Read a Matrix Market coordinate file as a SparseSymMatrix.

    Accepts 'symmetric' files (one entry per unordered pair, either
    orientation) and 'general' files whose entries happen to be symmetric;
    a general file with asymmetric content is an error.
    """
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        raw = fh.read()
    lines = raw.splitlines()
    if not lines:
        raise MatrixFormatError(f"{path}: empty file")
    symmetry = _parse_mm_header(lines[0], path)

    body = [ln for ln in lines[1:] if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise MatrixFormatError(f"{path}: missing size line")
    size_parts = body[0].split()
    if len(size_parts) != 3:
        raise MatrixFormatError(f"{path}: malformed size line: {body[0]!r}")
    try:
        rows, cols, nnz = (int(p) for p in size_parts)
    except ValueError as exc:
        raise MatrixFormatError(f"{path}: malformed size line: {body[0]!r}") from exc
    if rows != cols:
        raise MatrixFormatError(f"{path}: dimension mismatch: {rows} x {cols} is not square")
    if rows < 1:
        raise MatrixFormatError(f"{path}: dimension must be positive, got {rows}")
    entry_lines = body[1:]
    if len(entry_lines) != nnz:
        raise MatrixFormatError(
            f"{path}: size line promises {nnz} entries, file has {len(entry_lines)}"
        )

    triples: list[tuple[int, int, float]] = []
    for ln in entry_lines:
        parts = ln.split()
        if len(parts) != 3:
            raise MatrixFormatError(f"{path}: malformed entry line: {ln!r}")
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError as exc:
            raise MatrixFormatError(f"{path}: malformed entry line: {ln!r}") from exc
        if not (1 <= i <= rows and 1 <= j <= rows):
            raise MatrixFormatError(f"{path}: entry ({i}, {j}) outside [1, {rows}]")
        if not math.isfinite(v):
            raise MatrixFormatError(f"{path}: entry ({i}, {j}) is not finite")
        triples.append((i, j, v))

    diag = np.zeros(rows, dtype=float)
    seen_diag: set[int] = set()
    off: dict[tuple[int, int], float] = {}

    if symmetry == "general":
        # Entries must pair up into an exactly symmetric matrix.
        by_pos: dict[tuple[int, int], float] = {}
        for i, j, v in triples:
            if (i, j) in by_pos:
                raise MatrixFormatError(f"{path}: duplicate entry ({i}, {j})")
            by_pos[(i, j)] = v
        for (i, j), v in by_pos.items():
            if i == j:
                continue
            if by_pos.get((j, i)) != v:
                raise MatrixFormatError(
                    f"{path}: general file is not symmetric at ({i}, {j})"
                )
        triples = [(i, j, v) for (i, j), v in sorted(by_pos.items()) if i >= j]

    for i, j, v in triples:
        if i == j:
            if i in seen_diag:
                raise MatrixFormatError(f"{path}: duplicate diagonal entry {i}")
            seen_diag.add(i)
            diag[i - 1] = v
        else:
            key = (min(i, j), max(i, j))
            if key in off:
                raise MatrixFormatError(f"{path}: duplicate entry for pair {key}")
            if v != 0.0:
                off[key] = v

    return SparseSymMatrix(rows, diag, [(i, j, v) for (i, j), v in off.items()])
