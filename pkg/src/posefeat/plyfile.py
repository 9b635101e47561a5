#
# posefeat.plyfile - PLY mesh import/export and surface sampling (2026-10-17)
# Copyright (c) 2026, the posefeat developers
#
# Permission to use, copy, modify, and/or distribute this software for any
# purpose with or without fee is hereby granted, provided that the above
# copyright notice and this permission notice appear in all copies.
#
# THE SOFTWARE IS PROVIDED "AS IS" AND THE AUTHOR DISCLAIMS ALL WARRANTIES WITH
# REGARD TO THIS SOFTWARE INCLUDING ALL IMPLIED WARRANTIES OF MERCHANTABILITY
# AND FITNESS. IN NO EVENT SHALL THE AUTHOR BE LIABLE FOR ANY SPECIAL, DIRECT,
# INDIRECT, OR CONSEQUENTIAL DAMAGES OR ANY DAMAGES WHATSOEVER RESULTING FROM
# LOSS OF USE, DATA OR PROFITS, WHETHER IN AN ACTION OF CONTRACT, NEGLIGENCE OR
# OTHER TORTIOUS ACTION, ARISING OUT OF OR IN CONNECTION WITH THE USE OR
# PERFORMANCE OF THIS SOFTWARE.
#

"""PLY import and export for textured object models

Object models are triangle meshes with optional per-vertex colors, stored
as ASCII or binary little-endian PLY (the format used by BOP datasets).
Byte colors are scaled to [0, 1] on import and back on export.
"""

import posefeat

from posefeat import util
from posefeat.geometry import PointCloud

import logging

import numpy as np

logger = logging.getLogger(__name__)

# PLY scalar type names -> little endian numpy dtypes
PLY_TYPES = {
    'char': 'i1', 'int8': 'i1',
    'uchar': 'u1', 'uint8': 'u1',
    'short': '<i2', 'int16': '<i2',
    'ushort': '<u2', 'uint16': '<u2',
    'int': '<i4', 'int32': '<i4',
    'uint': '<u4', 'uint32': '<u4',
    'float': '<f4', 'float32': '<f4',
    'double': '<f8', 'float64': '<f8',
}

FORMAT_ASCII = 'ascii'
FORMAT_BINARY_LE = 'binary_little_endian'
FORMAT_BINARY_BE = 'binary_big_endian'


class PlyError(posefeat.DataError):
    pass


class PlyHeaderError(PlyError):
    pass


class PlyTruncatedError(PlyError):
    pass


class PlyEndiannessError(PlyError):
    pass


class MeshAreaError(posefeat.DataError):
    pass


class TexturedMesh(object):
    """Triangle mesh (mm) with optional per-vertex colors in [0, 1]"""

    def __init__(self, vertices, triangles, colors=None):
        vertices = np.array(vertices, dtype=np.float64).reshape(-1, 3)
        triangles = np.array(triangles, dtype=np.int64).reshape(-1, 3)

        if len(triangles) == 0:
            raise PlyError('A mesh needs at least one triangle')
        if triangles.min() < 0 or triangles.max() >= len(vertices):
            raise PlyError('Triangle index out of range (%d vertices)' % len(vertices))

        if colors is not None:
            colors = np.array(colors, dtype=np.float64).reshape(-1, 3)
            if len(colors) != len(vertices):
                raise PlyError('Got %d colors for %d vertices' % (len(colors), len(vertices)))

        self.vertices = vertices
        self.triangles = triangles
        self.colors = colors

    def __repr__(self):
        return '<TexturedMesh %d vertices, %d triangles>' % (len(self.vertices), len(self.triangles))

    def triangle_areas(self):
        a, b, c = (self.vertices[self.triangles[:, i]] for i in range(3))
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


class _Element(object):
    def __init__(self, name, count):
        self.name = name
        self.count = count
        self.properties = []  # (name, dtype) or (name, (count_dtype, item_dtype))

    def property_names(self):
        return [name for name, _ in self.properties]

    def has_lists(self):
        return any(isinstance(kind, tuple) for _, kind in self.properties)

    def record_dtype(self):
        return np.dtype([(name, kind) for name, kind in self.properties])


def _parse_header(fp, filename):
    magic = fp.readline()
    if magic.strip() != b'ply':
        raise PlyHeaderError('%s: not a PLY file (bad magic %r)' % (filename, magic[:16]))

    fmt = None
    elements = []
    while True:
        line = fp.readline()
        if not line:
            raise PlyHeaderError('%s: header ends before end_header' % filename)

        words = line.decode('ascii', 'replace').split()
        if not words or words[0] in ('comment', 'obj_info'):
            continue

        keyword = words[0]
        if keyword == 'end_header':
            break
        elif keyword == 'format':
            if len(words) != 3:
                raise PlyHeaderError('%s: malformed format line' % filename)
            fmt = words[1]
            if fmt == FORMAT_BINARY_BE:
                raise PlyEndiannessError('%s: big-endian PLY files are not supported' % filename)
            if fmt not in (FORMAT_ASCII, FORMAT_BINARY_LE):
                raise PlyHeaderError('%s: unknown PLY format %r' % (filename, fmt))
        elif keyword == 'element':
            if len(words) != 3:
                raise PlyHeaderError('%s: malformed element line' % filename)
            try:
                elements.append(_Element(words[1], int(words[2])))
            except ValueError:
                raise PlyHeaderError('%s: bad element count %r' % (filename, words[2]))
        elif keyword == 'property':
            if not elements:
                raise PlyHeaderError('%s: property before any element' % filename)
            try:
                if words[1] == 'list':
                    kind = (PLY_TYPES[words[2]], PLY_TYPES[words[3]])
                    name = words[4]
                else:
                    kind = PLY_TYPES[words[1]]
                    name = words[2]
            except (KeyError, IndexError):
                raise PlyHeaderError('%s: malformed property line %r' % (filename, line.strip()))
            elements[-1].properties.append((name, kind))
        else:
            raise PlyHeaderError('%s: unexpected header keyword %r' % (filename, keyword))

    if fmt is None:
        raise PlyHeaderError('%s: missing format line' % filename)

    return fmt, elements


def _fan_triangulate(polygons):
    triangles = []
    for polygon in polygons:
        for i in range(1, len(polygon) - 1):
            triangles.append((polygon[0], polygon[i], polygon[i + 1]))
    return triangles


def _read_ascii(fp, elements, filename):
    data = {}
    for element in elements:
        rows = []
        for _ in range(element.count):
            line = fp.readline()
            if not line:
                raise PlyTruncatedError('%s: expected %d %s rows, got %d' %
                                        (filename, element.count, element.name, len(rows)))
            rows.append(line.split())

        if not element.has_lists():
            try:
                values = np.array(rows, dtype=np.float64).reshape(element.count, len(element.properties))
            except ValueError:
                raise PlyTruncatedError('%s: malformed %s row' % (filename, element.name))
            data[element.name] = {name: values[:, i] for i, name in enumerate(element.property_names())}
        else:
            # Only single-list elements (faces) are supported in list form
            polygons = []
            for row in rows:
                count = int(row[0])
                if len(row) < count + 1:
                    raise PlyTruncatedError('%s: short %s row' % (filename, element.name))
                polygons.append([int(v) for v in row[1:count + 1]])
            data[element.name] = {'polygons': polygons}
    return data


def _read_binary(payload, elements, filename):
    data = {}
    offset = 0
    for element in elements:
        if not element.has_lists():
            dtype = element.record_dtype()
            size = dtype.itemsize * element.count
            if offset + size > len(payload):
                raise PlyTruncatedError('%s: payload ends inside element %r' % (filename, element.name))
            records = np.frombuffer(payload, dtype=dtype, count=element.count, offset=offset)
            offset += size
            data[element.name] = {name: records[name].astype(np.float64) for name in element.property_names()}
            continue

        if len(element.properties) != 1:
            raise PlyHeaderError('%s: element %r mixes list and scalar properties' % (filename, element.name))

        _, (count_type, item_type) = element.properties[0]
        count_dtype, item_dtype = np.dtype(count_type), np.dtype(item_type)

        # Fast path: every face is a triangle
        fast = np.dtype([('n', count_dtype), ('v', item_dtype, (3,))])
        if offset + fast.itemsize * element.count <= len(payload):
            records = np.frombuffer(payload, dtype=fast, count=element.count, offset=offset)
            if element.count == 0 or np.all(records['n'] == 3):
                offset += fast.itemsize * element.count
                data[element.name] = {'polygons': records['v'].astype(np.int64)}
                continue

        polygons = []
        for _ in range(element.count):
            if offset + count_dtype.itemsize > len(payload):
                raise PlyTruncatedError('%s: payload ends inside element %r' % (filename, element.name))
            count = int(np.frombuffer(payload, dtype=count_dtype, count=1, offset=offset)[0])
            offset += count_dtype.itemsize
            if offset + count * item_dtype.itemsize > len(payload):
                raise PlyTruncatedError('%s: payload ends inside element %r' % (filename, element.name))
            polygons.append(np.frombuffer(payload, dtype=item_dtype, count=count, offset=offset).tolist())
            offset += count * item_dtype.itemsize
        data[element.name] = {'polygons': polygons}

    return data


def read_ply_model(path):
    """Read an ASCII or binary little-endian PLY mesh into a TexturedMesh"""
    with open(path, 'rb') as fp:
        fmt, elements = _parse_header(fp, path)
        if fmt == FORMAT_ASCII:
            data = _read_ascii(fp, elements, path)
        else:
            data = _read_binary(fp.read(), elements, path)

    vertex = data.get('vertex')
    if vertex is None or not all(axis in vertex for axis in 'xyz'):
        raise PlyHeaderError('%s: no vertex element with x, y, z' % path)
    vertices = np.stack([vertex['x'], vertex['y'], vertex['z']], axis=1)

    colors = None
    if all(channel in vertex for channel in ('red', 'green', 'blue')):
        colors = np.stack([vertex['red'], vertex['green'], vertex['blue']], axis=1)
        kinds = dict(next(e for e in elements if e.name == 'vertex').properties)
        if np.dtype(kinds['red']).kind in 'iu':
            colors = colors / 255.0

    face = data.get('face')
    if face is None:
        raise PlyHeaderError('%s: no face element' % path)
    polygons = face['polygons']
    if isinstance(polygons, np.ndarray):
        triangles = polygons
    else:
        triangles = _fan_triangulate(polygons)

    mesh = TexturedMesh(vertices, triangles, colors)
    logger.debug('Read %s from %s', mesh, path)
    return mesh


def write_ply_model(path, mesh, binary=True):
    """Write a TexturedMesh as PLY (float32 positions, uchar colors)"""
    header = ['ply',
              'format %s 1.0' % (FORMAT_BINARY_LE if binary else FORMAT_ASCII),
              'comment written by posefeat %s' % posefeat.__version__,
              'element vertex %d' % len(mesh.vertices),
              'property float x', 'property float y', 'property float z']
    if mesh.colors is not None:
        header += ['property uchar red', 'property uchar green', 'property uchar blue']
    header += ['element face %d' % len(mesh.triangles),
               'property list uchar int vertex_indices',
               'end_header']

    vertices = mesh.vertices.astype('<f4')
    colors = None
    if mesh.colors is not None:
        colors = np.clip(np.rint(mesh.colors * 255.0), 0, 255).astype('u1')

    with util.update_file_safely(path) as temp_filename:
        with open(temp_filename, 'wb') as fp:
            fp.write(('\n'.join(header) + '\n').encode('ascii'))
            if binary:
                fields = [('x', '<f4'), ('y', '<f4'), ('z', '<f4')]
                if colors is not None:
                    fields += [('red', 'u1'), ('green', 'u1'), ('blue', 'u1')]
                records = np.zeros(len(vertices), dtype=fields)
                records['x'], records['y'], records['z'] = vertices.T
                if colors is not None:
                    records['red'], records['green'], records['blue'] = colors.T
                fp.write(records.tobytes())

                faces = np.zeros(len(mesh.triangles), dtype=[('n', 'u1'), ('v', '<i4', (3,))])
                faces['n'] = 3
                faces['v'] = mesh.triangles
                fp.write(faces.tobytes())
            else:
                lines = []
                for i, vertex in enumerate(vertices):
                    row = '%r %r %r' % tuple(float(v) for v in vertex)
                    if colors is not None:
                        row += ' %d %d %d' % tuple(colors[i])
                    lines.append(row)
                lines.extend('3 %d %d %d' % tuple(t) for t in mesh.triangles)
                fp.write(('\n'.join(lines) + '\n').encode('ascii'))


def sample_mesh_surface(mesh, count, seed):
    """Area-weighted uniform sampling of count points on the mesh surface

    Colors are interpolated barycentrically from the vertex colors.
    """
    if count < 1:
        raise ValueError('Sample count must be at least 1, got %d' % count)

    areas = mesh.triangle_areas()
    total = areas.sum()
    if not total > 0.0:
        raise MeshAreaError('Mesh has zero surface area')

    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(areas), size=count, p=areas / total)
    r1 = np.sqrt(rng.random(count))
    r2 = rng.random(count)
    weights = np.stack([1.0 - r1, r1 * (1.0 - r2), r1 * r2], axis=1)

    corners = mesh.triangles[chosen]
    positions = np.einsum('nk,nkd->nd', weights, mesh.vertices[corners])

    colors = None
    if mesh.colors is not None:
        colors = np.clip(np.einsum('nk,nkd->nd', weights, mesh.colors[corners]), 0.0, 1.0)

    return PointCloud(positions, colors)
