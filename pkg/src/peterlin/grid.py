"""Periodic 2D grid on [0, 2pi)^2 with pseudo-spectral operators.

Field layout (all float64, y-outer / x-inner):

* scalar: ``(ny, nx)``
* vector: ``(2, ny, nx)`` holding ``(v_x, v_y)``
* symmetric tensor: ``(3, ny, nx)`` holding ``(C11, C12, C22)``
* velocity gradient: ``(2, 2, ny, nx)`` with ``G[i, j] = d u_i / d x_j``

Every operator accepts arbitrary leading axes in front of ``(ny, nx)``.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import PeterlinError, ShapeError

LENGTH = 2.0 * np.pi


class TorusGrid2D:
    """Uniform periodic grid with cached wavenumber tables and 2/3 dealias mask."""

    def __init__(self, nx, ny=None):
        ny = nx if ny is None else ny
        for n in (nx, ny):
            if int(n) != n or n < 8 or n % 2:
                raise ShapeError(f"grid sizes must be even integers >= 8, got {n}")
        self.nx, self.ny = int(nx), int(ny)
        self.shape = (self.ny, self.nx)
        self.hx = LENGTH / self.nx
        self.hy = LENGTH / self.ny
        self.cell_area = self.hx * self.hy
        x = np.arange(self.nx) * self.hx
        y = np.arange(self.ny) * self.hy
        self.x, self.y = np.meshgrid(x, y)

        kx = np.fft.rfftfreq(self.nx, d=1.0 / self.nx)
        ky = np.fft.fftfreq(self.ny, d=1.0 / self.ny)
        self.kx = kx[None, :] * np.ones((self.ny, 1))
        self.ky = ky[:, None] * np.ones((1, kx.size))
        self.k2 = self.kx ** 2 + self.ky ** 2
        # first derivatives drop the unpaired Nyquist modes
        self.ikx = 1j * np.where(np.abs(self.kx) == self.nx // 2, 0.0, self.kx)
        self.iky = 1j * np.where(np.abs(self.ky) == self.ny // 2, 0.0, self.ky)
        # the projection uses the same Nyquist-free wavenumbers so that it
        # stays idempotent on the rfft layout
        self.kx_p = self.ikx.imag.copy()
        self.ky_p = self.iky.imag.copy()
        kp2 = self.kx_p ** 2 + self.ky_p ** 2
        self.inv_k2 = np.zeros_like(kp2)
        self.inv_k2[kp2 > 0] = 1.0 / kp2[kp2 > 0]
        self.dealias = ((np.abs(self.kx) < self.nx / 3.0)
                        & (np.abs(self.ky) < self.ny / 3.0)).astype(float)
        for arr in (self.kx, self.ky, self.k2, self.ikx, self.iky, self.kx_p, self.ky_p,
                    self.inv_k2, self.dealias, self.x, self.y):
            arr.setflags(write=False)

    def __repr__(self):
        return f"TorusGrid2D(nx={self.nx}, ny={self.ny})"

    # transforms --------------------------------------------------------
    def check(self, f):
        f = np.asarray(f, dtype=float)
        if f.shape[-2:] != self.shape:
            raise ShapeError(f"field shape {f.shape} does not end with grid shape {self.shape}")
        return f

    def forward(self, f):
        return np.fft.rfft2(self.check(f))

    def backward(self, f_hat):
        return np.fft.irfft2(f_hat, s=self.shape)

    def filter(self, f):
        """Apply the 2/3-rule mask to a physical-space field."""
        return self.backward(self.forward(f) * self.dealias)

    # differential operators ---------------------------------------------
    def gradient(self, f):
        f_hat = self.forward(f)
        return np.stack([self.backward(self.ikx * f_hat),
                         self.backward(self.iky * f_hat)], axis=-3)

    def divergence(self, v):
        v = self.check(v)
        if v.shape[-3] != 2:
            raise ShapeError("divergence expects a vector field with 2 components")
        v_hat = self.forward(v)
        return self.backward(self.ikx * v_hat[..., 0, :, :] + self.iky * v_hat[..., 1, :, :])

    def laplacian(self, f):
        return self.backward(-self.k2 * self.forward(f))

    def tensor_divergence(self, T):
        """Row-wise divergence of a symmetric tensor stored as (T11, T12, T22)."""
        T = self.check(T)
        if T.shape[-3] != 3:
            raise ShapeError("tensor fields store 3 components (T11, T12, T22)")
        T_hat = self.forward(T)
        t11, t12, t22 = T_hat[..., 0, :, :], T_hat[..., 1, :, :], T_hat[..., 2, :, :]
        return np.stack([self.backward(self.ikx * t11 + self.iky * t12),
                         self.backward(self.ikx * t12 + self.iky * t22)], axis=-3)

    def velocity_gradient(self, u, dealiased=True):
        """``G[i, j] = d u_i / d x_j`` from a (dealiased) spectral derivative."""
        u_hat = self.forward(u)
        if dealiased:
            u_hat = u_hat * self.dealias
        return np.stack([np.stack([self.backward(self.ikx * u_hat[i]),
                                   self.backward(self.iky * u_hat[i])])
                         for i in range(2)])

    def advect(self, u, f):
        """Dealiased ``(u . grad) f`` for a field ``f`` with any leading axes."""
        u = self.check(u)
        f_hat = self.forward(f) * self.dealias
        u_f = self.backward(self.forward(u) * self.dealias)
        prod = (u_f[0] * self.backward(self.ikx * f_hat)
                + u_f[1] * self.backward(self.iky * f_hat))
        return self.filter(prod)

    def leray_project(self, v):
        return self.backward(self.leray_project_hat(self.forward(v)))

    def leray_project_hat(self, v_hat):
        """Remove the gradient part of a spectral vector field; the mean is kept."""
        kdotv = self.kx_p * v_hat[0] + self.ky_p * v_hat[1]
        return np.stack([v_hat[0] - self.kx_p * kdotv * self.inv_k2,
                         v_hat[1] - self.ky_p * kdotv * self.inv_k2])

    def implicit_diffusion(self, f, coeff, dt):
        """Backward-Euler solve of ``df/dt = coeff * laplacian f`` over one step."""
        return self.backward(self.forward(f) / (1.0 + dt * coeff * self.k2))

    # reductions --------------------------------------------------------
    def integrate(self, f):
        return np.sum(self.check(f), axis=(-2, -1)) * self.cell_area

    def mean(self, f):
        return np.mean(self.check(f), axis=(-2, -1))

    def l2_norm(self, f):
        f = self.check(f)
        return float(np.sqrt(np.sum(f * f) * self.cell_area))

    def tensor_l2_norm(self, T):
        """L2 norm of a symmetric tensor field counting the off-diagonal twice."""
        T = self.check(T)
        sq = T[0] ** 2 + 2.0 * T[1] ** 2 + T[2] ** 2
        return float(np.sqrt(np.sum(sq) * self.cell_area))


def kinetic_energy(grid, u):
    return 0.5 * float(np.sum(grid.integrate(np.asarray(u) ** 2)))


def trace(C):
    return C[0] + C[2]


def identity_tensor(grid, scale=1.0):
    C = np.zeros((3,) + grid.shape)
    C[0] = scale
    C[2] = scale
    return C


# field snapshots --------------------------------------------------------
FIELD_MAGIC = b"PKF1"
_NAME_LEN = 32


def write_fields(path_or_file, fields):
    """Write named scalar fields in the PKF1 layout.

    ``fields`` maps names to ``(ny, nx)`` arrays; order is preserved.
    """
    arrays = [(name, np.ascontiguousarray(arr, dtype="<f8")) for name, arr in fields.items()]
    if not arrays:
        raise ShapeError("no fields to write")
    ny, nx = arrays[0][1].shape
    buf = bytearray(FIELD_MAGIC)
    buf += struct.pack("<III", nx, ny, len(arrays))
    for name, arr in arrays:
        if arr.shape != (ny, nx):
            raise ShapeError(f"field {name!r} has shape {arr.shape}, expected {(ny, nx)}")
        raw = name.encode("ascii")
        if len(raw) > _NAME_LEN:
            raise ShapeError(f"field name {name!r} longer than {_NAME_LEN} bytes")
        buf += raw.ljust(_NAME_LEN, b"\0")
        buf += arr.tobytes()
    if hasattr(path_or_file, "write"):
        path_or_file.write(bytes(buf))
    else:
        with open(path_or_file, "wb") as fh:
            fh.write(bytes(buf))


def _read_one_record(fh):
    magic = fh.read(4)
    if not magic:
        return None
    if magic != FIELD_MAGIC:
        raise PeterlinError(f"bad magic {magic!r}, expected {FIELD_MAGIC!r}")
    header = fh.read(12)
    if len(header) != 12:
        raise PeterlinError("truncated PKF1 header")
    nx, ny, n_fields = struct.unpack("<III", header)
    out = {}
    for _ in range(n_fields):
        name = fh.read(_NAME_LEN).rstrip(b"\0").decode("ascii")
        raw = fh.read(8 * nx * ny)
        if len(raw) != 8 * nx * ny:
            raise PeterlinError(f"truncated data for field {name!r}")
        out[name] = np.frombuffer(raw, dtype="<f8").reshape(ny, nx).copy()
    return out


def read_fields(path):
    """Read a single PKF1 record into an ordered ``{name: array}`` dict."""
    with open(path, "rb") as fh:
        rec = _read_one_record(fh)
    if rec is None:
        raise PeterlinError(f"{path} is empty")
    return rec


def read_field_series(path):
    """Read all concatenated PKF1 records from a file."""
    records = []
    with open(path, "rb") as fh:
        while True:
            rec = _read_one_record(fh)
            if rec is None:
                break
            records.append(rec)
    if not records:
        raise PeterlinError(f"{path} holds no PKF1 records")
    return records
