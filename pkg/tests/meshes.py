"""Small synthetic meshes for tests."""
import numpy as np

from qmatch.geometry import TriangleMesh


def grid_mesh(nx, ny, spacing=1.0, bump=0.0):
    """Triangulated ``nx x ny`` planar grid, optionally lifted by a smooth bump."""
    xs, ys = np.meshgrid(np.arange(nx) * spacing, np.arange(ny) * spacing)
    z = bump * np.sin(xs / max(1, nx - 1) * np.pi) * np.sin(ys / max(1, ny - 1) * np.pi)
    V = np.column_stack([xs.ravel(), ys.ravel(), z.ravel()])
    F = []
    for y in range(ny - 1):
        for x in range(nx - 1):
            i = y * nx + x
            F += [[i, i + 1, i + nx + 1], [i, i + nx + 1, i + nx]]
    return TriangleMesh(V, np.array(F))
