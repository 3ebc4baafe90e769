"""Shape-from-shading on top of the solver.

A grayscale photograph of a Lambertian surface lit vertically from infinity
satisfies |Du| = sqrt(1/I^2 - 1) for the surface height u and brightness
I in (0, 1].  Pixels map one-to-one onto grid nodes (pixel centers are the
nodes, image row 0 is the top of the domain) and the right-hand side is the
piecewise-constant per-pixel value - no sub-pixel smoothing of the datum.

Two regularizations handle real images: brightness is floored at eps_i on
ingestion (a zero pixel would make the slope infinite) and the slope field is
floored at epsilon_f (a maximal-brightness "singular point" would make it
vanish; the truncated problems approach the maximal subsolution as the floor
goes to 0).  Optionally, an anisotropic diagonal dynamics matrix built from
one-pixel brightness differences lets the reconstruction keep sharp jumps
across strong image edges instead of smearing them.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import Domain, NodeField, build_grid
from .problem import Problem, RhsField, SigmaField
from .solver import SolveResult, SolverConfig, solve

__all__ = [
    "PgmError",
    "IntensityImage",
    "SfsConfig",
    "load_pgm",
    "write_pgm",
    "intensity_to_f",
    "anisotropic_sigma",
    "reconstruct",
    "render_intensity",
    "read_silhouette_csv",
]

EPS_I_DEFAULT = 1e-3


class PgmError(ValueError):
    """Malformed PGM input; the message names the byte offset of the failure."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = int(offset)


@dataclass
class IntensityImage:
    """Grayscale image with brightness values in (0, 1].

    `values` has shape (height, width) with row 0 at the top, as stored in the
    file.  `pitch` is the physical pixel spacing, which becomes the grid
    spacing of the reconstruction.  `clamped` counts pixels raised to the
    brightness floor at ingestion.
    """

    width: int
    height: int
    values: np.ndarray
    pitch: float = 1.0
    clamped: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.height, self.width):
            raise ValueError(f"values shape {v.shape} does not match {self.height} x {self.width}")
        if not np.all(np.isfinite(v)) or v.min() <= 0 or v.max() > 1.0:
            raise ValueError("brightness values must lie in (0, 1]")
        if not self.pitch > 0:
            raise ValueError(f"pixel pitch must be positive, got {self.pitch}")
        self.values = v

    def node_values(self) -> np.ndarray:
        """Values reordered to grid layout: row j = 0 is the bottom of the domain."""
        return np.flipud(self.values)

    def grid_domain(self) -> Domain:
        return Domain(0.0, (self.width - 1) * self.pitch, 0.0, (self.height - 1) * self.pitch)


# -- PGM input/output ---------------------------------------------------------


def _skip_space_and_comments(data: bytes, pos: int) -> int:
    while pos < len(data):
        c = data[pos]
        if c in b" \t\r\n":
            pos += 1
        elif c == ord("#"):
            nl = data.find(b"\n", pos)
            if nl < 0:
                raise PgmError("unterminated comment", pos)
            pos = nl + 1
        else:
            break
    return pos


def _next_token(data: bytes, pos: int) -> tuple[bytes, int, int]:
    pos = _skip_space_and_comments(data, pos)
    if pos >= len(data):
        raise PgmError("unexpected end of file in header", pos)
    start = pos
    while pos < len(data) and data[pos] not in b" \t\r\n#":
        pos += 1
    return data[start:pos], start, pos


def _int_token(data: bytes, pos: int, what: str) -> tuple[int, int]:
    tok, start, pos = _next_token(data, pos)
    try:
        return int(tok), pos
    except ValueError:
        raise PgmError(f"invalid {what} token {tok!r}", start) from None


def load_pgm(path, eps_i: float = EPS_I_DEFAULT, pitch: float = 1.0) -> IntensityImage:
    """Read a NetPBM grayscale image, P2 (ASCII) or P5 (binary, maxval <= 255).

    `#` comments are allowed between header tokens.  Samples are normalized by
    maxval into [0, 1]; values below eps_i (zeros in particular) are raised to
    eps_i and counted in the result's `clamped` field.
    """
    if not eps_i > 0:
        raise ValueError(f"eps_i must be positive, got {eps_i}")
    data = Path(path).read_bytes()
    if len(data) < 2 or data[:1] != b"P":
        raise PgmError("not a PGM file (missing P2/P5 magic)", 0)
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise PgmError(f"unsupported format {magic!r}, need P2 or P5", 0)
    pos = 2
    width, pos = _int_token(data, pos, "width")
    height, pos = _int_token(data, pos, "height")
    maxval_start = _skip_space_and_comments(data, pos)
    maxval, pos = _int_token(data, pos, "maxval")
    if width < 1 or height < 1:
        raise PgmError(f"invalid image size {width} x {height}", 2)
    if maxval < 1:
        raise PgmError(f"invalid maxval {maxval}", maxval_start)
    n = width * height

    if magic == b"P5":
        if maxval > 255:
            raise PgmError(f"P5 maxval {maxval} exceeds 255 (single-byte samples only)", maxval_start)
        if pos >= len(data) or data[pos] not in b" \t\r\n":
            raise PgmError("missing whitespace after maxval", pos)
        pos += 1  # exactly one whitespace byte separates header and raster
        raster = data[pos : pos + n]
        if len(raster) < n:
            raise PgmError(f"truncated raster: expected {n} bytes, got {len(raster)}", len(data))
        samples = np.frombuffer(raster, dtype=np.uint8).astype(float)
        over = samples > maxval
        if over.any():
            raise PgmError(
                f"sample value {int(samples[over.argmax()])} exceeds maxval {maxval}",
                pos + int(over.argmax()),
            )
    else:
        samples = np.empty(n)
        for k in range(n):
            try:
                val, pos = _int_token(data, pos, "sample")
            except PgmError:
                raise PgmError(f"truncated raster: expected {n} samples, got {k}", len(data)) from None
            if val < 0 or val > maxval:
                raise PgmError(f"sample value {val} out of range 0..{maxval}", pos)
            samples[k] = val
        tail = _skip_space_and_comments(data, pos)
        if tail < len(data):
            raise PgmError("trailing data after raster", tail)

    values = samples.reshape(height, width) / float(maxval)
    low = values < eps_i
    clamped = int(np.count_nonzero(low))
    if clamped:
        values = np.where(low, eps_i, values)
    return IntensityImage(width=width, height=height, values=values, pitch=pitch, clamped=clamped)


def write_pgm(path, values, maxval: int = 255, binary: bool = True) -> None:
    """Write brightness values in [0, 1] as a PGM file (quantized to maxval levels)."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 2:
        raise ValueError("values must be a 2-d array")
    if not (1 <= maxval <= 255):
        raise ValueError(f"maxval must be in 1..255, got {maxval}")
    q = np.clip(np.rint(v * maxval), 0, maxval).astype(np.uint8)
    h, w = q.shape
    header = f"P5\n{w} {h}\n{maxval}\n" if binary else f"P2\n{w} {h}\n{maxval}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if binary:
            fh.write(q.tobytes())
        else:
            body = "\n".join(" ".join(str(int(s)) for s in row) for row in q)
            fh.write(body.encode("ascii") + b"\n")


# -- slope field and dynamics -------------------------------------------------


def intensity_to_f(intensity, epsilon_f: float):
    """Slope magnitude sqrt(1/I^2 - 1), floored at epsilon_f.

    The floor regularizes singular points (I = 1, zero slope); it makes the
    right-hand side admissible for the solver, whose floor rho equals
    epsilon_f.  Monotone non-increasing in I.
    """
    if not epsilon_f > 0:
        raise ValueError(f"epsilon_f must be positive, got {epsilon_f}")
    i = np.asarray(intensity, dtype=float)
    return np.maximum(np.sqrt(np.maximum(1.0 / i**2 - 1.0, 0.0)), epsilon_f)


def _nearest_pixel_lookup(grid_values: np.ndarray, pitch: float):
    """Point function sampling an (ny, nx) grid-ordered array at the nearest node."""
    ny, nx = grid_values.shape

    def fn(x, y):
        i = np.clip(np.rint(np.asarray(x, dtype=float) / pitch).astype(np.int64), 0, nx - 1)
        j = np.clip(np.rint(np.asarray(y, dtype=float) / pitch).astype(np.int64), 0, ny - 1)
        return grid_values[j, i]

    return fn


def anisotropic_sigma(image: IntensityImage, p: float) -> SigmaField:
    """Diagonal dynamics that slow down across strong brightness edges.

    Entry (1,1) at a pixel is (1 + |I(x - d, y) - I(x + d, y)|)^(-p) with d one
    pixel pitch (one-sided differences on the image border); entry (2,2) is the
    analogue in y.  Entries lie in (0, 1] and shrink as p grows; p = 0 gives
    the identity exactly.  Sampling is nearest-pixel, constant between pixel
    centers.
    """
    if p < 0:
        raise ValueError(f"anisotropy exponent p must be >= 0, got {p}")
    v = image.values  # (H, W), row 0 = top; |differences| make the row order moot
    dx = np.empty_like(v)
    dx[:, 1:-1] = v[:, :-2] - v[:, 2:]
    dx[:, 0] = v[:, 0] - v[:, 1] if v.shape[1] > 1 else 0.0
    dx[:, -1] = v[:, -2] - v[:, -1] if v.shape[1] > 1 else 0.0
    dy = np.empty_like(v)
    dy[1:-1, :] = v[:-2, :] - v[2:, :]
    dy[0, :] = v[0, :] - v[1, :] if v.shape[0] > 1 else 0.0
    dy[-1, :] = v[-2, :] - v[-1, :] if v.shape[0] > 1 else 0.0
    s11 = (1.0 + np.abs(dx)) ** (-p)
    s22 = (1.0 + np.abs(dy)) ** (-p)
    lookup11 = _nearest_pixel_lookup(np.flipud(s11), image.pitch)
    lookup22 = _nearest_pixel_lookup(np.flipud(s22), image.pitch)
    return SigmaField.diagonal(lookup11, lookup22, m_sigma=1.0)


# -- reconstruction -----------------------------------------------------------


@dataclass(frozen=True)
class SfsConfig:
    """Reconstruction parameters.

    boundary_mode 'zero' stands the surface on a flat background;
    'silhouette' requires a {(i, j): height} map covering every boundary node
    (i is the column index, j the row index from the bottom).  solver = None
    uses defaults with h equal to the pixel pitch.
    """

    epsilon_f: float = 1e-2
    p: float = 0.0
    boundary_mode: str = "zero"
    silhouette: dict | None = None
    solver: SolverConfig | None = None

    def __post_init__(self):
        if not self.epsilon_f > 0:
            raise ValueError(f"epsilon_f must be positive, got {self.epsilon_f}")
        if self.p < 0:
            raise ValueError(f"p must be >= 0, got {self.p}")
        if self.boundary_mode not in ("zero", "silhouette"):
            raise ValueError(f"unknown boundary mode {self.boundary_mode!r}")
        if self.boundary_mode == "silhouette" and self.silhouette is None:
            raise ValueError("silhouette boundary mode needs a silhouette height map")


def read_silhouette_csv(path) -> dict:
    """Read boundary heights from CSV with header `i,j,height`."""
    out: dict = {}
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != "i,j,height":
            raise ValueError(f"silhouette CSV must start with 'i,j,height', got {header!r}")
        for ln, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"silhouette CSV line {ln}: expected 3 fields, got {len(parts)}")
            i, j, height = int(parts[0]), int(parts[1]), float(parts[2])
            if (i, j) in out:
                raise ValueError(f"silhouette CSV line {ln}: duplicate node ({i}, {j})")
            out[(i, j)] = height
    return out


def _silhouette_boundary(grid, silhouette: dict) -> np.ndarray:
    """Grid-ordered (ny, nx) height array; hard error on any mismatch."""
    heights = np.full((grid.ny, grid.nx), np.nan)
    for (i, j), height in silhouette.items():
        if not (0 <= i < grid.nx and 0 <= j < grid.ny):
            raise ValueError(f"silhouette node ({i}, {j}) outside the {grid.nx} x {grid.ny} image")
        if not grid.is_boundary(i, j):
            raise ValueError(f"silhouette node ({i}, {j}) is not a boundary pixel")
        if not np.isfinite(height) or height < 0:
            raise ValueError(f"silhouette height at ({i}, {j}) must be finite and >= 0, got {height}")
        heights[j, i] = height
    missing = int(np.count_nonzero(np.isnan(heights[grid.boundary_mask().reshape(grid.ny, grid.nx)])))
    if missing:
        raise ValueError(f"silhouette map misses {missing} boundary pixel(s)")
    return heights


def reconstruct(image: IntensityImage, cfg: SfsConfig) -> SolveResult:
    """Recover the surface from a brightness image.

    Builds the grid aligned with the pixels, the per-pixel slope field with
    floor epsilon_f, the dynamics (identity when p = 0, anisotropic
    otherwise) and the boundary data per cfg, then runs the solver.  The
    returned u is the surface height.
    """
    grid = build_grid(image.grid_domain(), image.width, image.height)
    f_nodes = intensity_to_f(image.node_values(), cfg.epsilon_f)
    f = RhsField(_nearest_pixel_lookup(f_nodes, image.pitch), rho=cfg.epsilon_f)
    sigma = SigmaField.identity() if cfg.p == 0 else anisotropic_sigma(image, cfg.p)
    if cfg.boundary_mode == "silhouette":
        heights = _silhouette_boundary(grid, cfg.silhouette)
        filled = np.where(np.isnan(heights), 0.0, heights)
        g = _nearest_pixel_lookup(filled, image.pitch)
    else:
        def g(x, y):
            return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)

    problem = Problem(domain=grid.domain, f=f, sigma=sigma, g=g)
    config = cfg.solver if cfg.solver is not None else SolverConfig(h=grid.dx)
    return solve(problem, grid, config)


def render_intensity(surface: NodeField, pitch: float | None = None) -> IntensityImage:
    """Forward model: brightness 1/sqrt(1 + |Du|^2) of a surface under vertical light.

    Gradients are central differences (one-sided on the border).  Used to
    manufacture synthetic test images from known surfaces; it shares no code
    with the reconstruction path.
    """
    grid = surface.grid
    if pitch is None:
        if abs(grid.dx1 - grid.dx2) > 1e-12 * grid.dx:
            raise ValueError("surface grid must have square cells to define a pixel pitch")
        pitch = grid.dx1
    z = surface.matrix()  # (ny, nx), row j from the bottom
    uy, ux = np.gradient(z, grid.dx2, grid.dx1)
    intensity = 1.0 / np.sqrt(1.0 + ux**2 + uy**2)
    return IntensityImage(
        width=grid.nx,
        height=grid.ny,
        values=np.flipud(intensity),
        pitch=pitch,
    )
