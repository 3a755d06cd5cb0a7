"""Model problems, baseline interpolation, and Matrix Market I/O."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidCondition, InvalidDimension, ParseError
from .linalg import as_matrix

KINDS = ("Laplacian1D", "Laplacian2D", "RandomHPD", "FromFile")


@dataclass(frozen=True)
class ProblemSpec:
    kind: str
    n: int = 0
    nx: int = 0
    ny: int = 0
    target_condition: float = 1.0
    seed: int = 0
    path: str = ""

    def build(self):
        if self.kind == "Laplacian1D":
            return laplacian_1d(self.n)
        if self.kind == "Laplacian2D":
            return laplacian_2d(self.nx, self.ny)
        if self.kind == "RandomHPD":
            return random_hpd(self.n, self.target_condition, self.seed)
        if self.kind == "FromFile":
            return load_matrix_market(self.path)
        raise ValueError(f"unknown problem kind {self.kind!r}")


def laplacian_1d(n):
    """Tridiagonal ``(-1, 2, -1)`` matrix of order ``n``."""
    if int(n) != n or n < 2:
        raise InvalidDimension(f"n must be an integer >= 2, got {n}")
    n = int(n)
    a = 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    return a.astype(np.complex128)


def laplacian_2d(nx, ny):
    """Five-point Laplacian on an ``nx`` by ``ny`` grid (Kronecker sum)."""
    for name, v in (("nx", nx), ("ny", ny)):
        if int(v) != v or v < 2:
            raise InvalidDimension(f"{name} must be an integer >= 2, got {v}")
    ax, ay = laplacian_1d(nx), laplacian_1d(ny)
    return np.kron(np.eye(int(ny)), ax) + np.kron(ay, np.eye(int(nx)))


def random_unitary(n, rng):
    """Haar-distributed unitary from the QR factor of a complex Gaussian matrix."""
    g = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hpd(n, target_condition, seed):
    """``Q diag(s) Q^H`` with ``s`` log-spaced on ``[1, target_condition]``.

    ``Q`` is drawn from ``numpy.random.default_rng(seed)`` (PCG64), so the
    output is reproducible for a given ``(n, target_condition, seed)``.
    """
    if int(n) != n or n < 2:
        raise InvalidDimension(f"n must be an integer >= 2, got {n}")
    if not np.isfinite(target_condition) or target_condition < 1:
        raise InvalidCondition(f"target_condition must be >= 1, got {target_condition}")
    n = int(n)
    rng = np.random.default_rng(int(seed))
    q = random_unitary(n, rng)
    s = np.logspace(0.0, np.log10(target_condition), n)
    s[-1] = target_condition
    a = (q * s) @ q.conj().T
    return 0.5 * (a + a.conj().T)


def geometric_interp_1d(n_fine):
    """Linear interpolation from ``(n_fine - 1)/2`` coarse points (stencil 1/2, 1, 1/2)."""
    if int(n_fine) != n_fine or n_fine < 3 or n_fine % 2 == 0:
        raise InvalidDimension(f"n_fine must be an odd integer >= 3, got {n_fine}")
    n_fine = int(n_fine)
    r = (n_fine - 1) // 2
    p = np.zeros((n_fine, r), dtype=np.complex128)
    for j in range(r):
        c = 2 * j + 1
        p[c - 1, j] = 0.5
        p[c, j] = 1.0
        p[c + 1, j] = 0.5
    return p


# Matrix Market ------------------------------------------------------------

_FIELDS = ("real", "complex", "integer", "pattern")
_SYMMETRIES = ("general", "symmetric", "hermitian", "skew-symmetric")


def _parse_value(tokens, field, lineno):
    try:
        if field == "complex":
            if len(tokens) != 2:
                raise ValueError
            return complex(float(tokens[0]), float(tokens[1]))
        if field == "pattern":
            if tokens:
                raise ValueError
            return 1.0
        if len(tokens) != 1:
            raise ValueError
        return complex(float(tokens[0]))
    except ValueError:
        raise ParseError(f"expected a {field} value, got {' '.join(tokens)!r}", lineno) from None


def load_matrix_market(path):
    """Read a Matrix Market file (array or coordinate) into a dense complex matrix.

    Symmetric, skew-symmetric and Hermitian storage is expanded to full.
    """
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise ParseError("empty file", 1)
    header = lines[0].split()
    if len(header) != 5 or header[0].lower() != "%%matrixmarket" or header[1].lower() != "matrix":
        raise ParseError("malformed header, expected '%%MatrixMarket matrix <format> <field> <symmetry>'", 1)
    fmt, field, symmetry = (h.lower() for h in header[2:])
    if fmt not in ("array", "coordinate") or field not in _FIELDS or symmetry not in _SYMMETRIES:
        raise ParseError(f"unsupported header qualifiers {fmt} {field} {symmetry}", 1)
    if fmt == "array" and field == "pattern":
        raise ParseError("pattern field is only valid for coordinate format", 1)

    body = [(i + 1, ln.split()) for i, ln in enumerate(lines) if i > 0 and ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise ParseError("missing size line", len(lines))
    size_line, size_tokens = body[0]
    try:
        sizes = [int(t) for t in size_tokens]
    except ValueError:
        raise ParseError(f"bad size line {' '.join(size_tokens)!r}", size_line) from None
    expected = 3 if fmt == "coordinate" else 2
    if len(sizes) != expected or min(sizes) < 0:
        raise ParseError(f"size line must have {expected} non-negative integers", size_line)
    rows, cols = sizes[0], sizes[1]
    if symmetry != "general" and rows != cols:
        raise ParseError(f"{symmetry} matrix must be square", size_line)
    m = np.zeros((rows, cols), dtype=np.complex128)
    entries = body[1:]

    def place(i, j, v):
        m[i, j] = v
        if i != j:
            if symmetry == "symmetric":
                m[j, i] = v
            elif symmetry == "hermitian":
                m[j, i] = np.conj(v)
            elif symmetry == "skew-symmetric":
                m[j, i] = -v

    if fmt == "coordinate":
        nnz = sizes[2]
        if len(entries) != nnz:
            raise ParseError(f"expected {nnz} entries, found {len(entries)}", entries[-1][0] if entries else size_line)
        for lineno, tok in entries:
            if len(tok) < 2:
                raise ParseError("entry needs row and column indices", lineno)
            try:
                i, j = int(tok[0]) - 1, int(tok[1]) - 1
            except ValueError:
                raise ParseError(f"bad indices {tok[:2]!r}", lineno) from None
            if not (0 <= i < rows and 0 <= j < cols):
                raise ParseError(f"index ({i + 1}, {j + 1}) out of range", lineno)
            place(i, j, _parse_value(tok[2:], field, lineno))
    else:
        if symmetry == "general":
            positions = [(i, j) for j in range(cols) for i in range(rows)]
        elif symmetry == "skew-symmetric":
            positions = [(i, j) for j in range(cols) for i in range(j + 1, rows)]
        else:
            positions = [(i, j) for j in range(cols) for i in range(j, rows)]
        if len(entries) != len(positions):
            last = entries[-1][0] if entries else size_line
            raise ParseError(f"expected {len(positions)} values, found {len(entries)}", last)
        for (lineno, tok), (i, j) in zip(entries, positions):
            place(i, j, _parse_value(tok, field, lineno))
    if symmetry == "hermitian" and np.any(np.abs(np.diag(m).imag) > 0):
        raise ParseError("hermitian matrix has a non-real diagonal entry", size_line)
    if not np.all(np.isfinite(m)):
        raise ParseError("non-finite entry", size_line)
    return m


def save_matrix_market(matrix, path, comment=None):
    """Write ``matrix`` in dense array format with 17 significant digits.

    Real matrices are written with field ``real``; anything with a non-zero
    imaginary part uses ``complex``.
    """
    m = as_matrix(matrix)
    is_real = not np.any(m.imag)
    field = "real" if is_real else "complex"
    out = [f"%%MatrixMarket matrix array {field} general"]
    if comment:
        out.extend("%" + ln for ln in str(comment).splitlines())
    out.append(f"{m.shape[0]} {m.shape[1]}")
    for v in m.T.ravel():
        if is_real:
            out.append(f"{v.real:.17g}")
        else:
            out.append(f"{v.real:.17g} {v.imag:.17g}")
    Path(path).write_text("\n".join(out) + "\n")
