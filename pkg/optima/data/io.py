import json
import re
from os.path import dirname
from os import makedirs
import numpy as np
import pandas as pd

from ..exceptions import DataFormatError
from .dataset import Dataset, TASKS


_KEY = re.compile(r'\s*([^\s=]+)=')
_BARE = re.compile(r'\S*')
_DECODER = json.JSONDecoder()


def _format_value(value):
    """ JSON text of <value>; strings that read back unchanged are written bare. """
    text = json.dumps(value, separators=(',', ':'))
    if isinstance(value, str) and value and '"' not in value \
            and not any(c.isspace() for c in value) and _parse_value(value) == value:
        return value
    return text


def _parse_value(text):
    try:
        return json.loads(text)
    except ValueError:
        return text


def _header(dataset):
    shape = 'x'.join(str(s) for s in dataset.input_shape)
    tokens = ['task={:s}'.format(dataset.task), 'shape={:s}'.format(shape)]
    tokens.append('seed={:s}'.format(_format_value(dataset.metadata.get('seed', 0))))
    tokens.append('generator={:s}'.format(_format_value(dataset.metadata.get('generator', 'unknown'))))
    for key in sorted(dataset.metadata):
        if key not in ('seed', 'generator'):
            tokens.append('{:s}={:s}'.format(key, _format_value(dataset.metadata[key])))
    return '# ' + ' '.join(tokens)


def _header_tokens(text):
    """ Splits 'key=value' tokens; a value may be JSON text containing whitespace. """
    fields, pos = {}, 0
    while text[pos:].strip():
        match = _KEY.match(text, pos)
        if match is None:
            token = text[pos:].split()[0]
            raise DataFormatError('malformed header token "{:s}"'.format(token), line=1)
        start = match.end()
        try:
            _, end = _DECODER.raw_decode(text, start)
            if end < len(text) and not text[end].isspace():
                raise ValueError
        except ValueError:
            end = _BARE.match(text, start).end()
        fields[match.group(1)] = text[start:end]
        pos = end
    return fields


def write_csv(path, dataset):
    """
    Write dataset to CSV. Rasters are flattened row-major.

    Args:

        path (str) - file path; parent directories are created

        dataset (Dataset)

    """
    if dirname(path):
        makedirs(dirname(path), exist_ok=True)
    dim = int(np.prod(dataset.input_shape))
    columns = ['x{:d}'.format(i) for i in range(dim)]
    frame = pd.DataFrame(dataset.inputs.reshape(dataset.size, dim), columns=columns)
    frame['y'] = dataset.targets
    with open(path, 'w', newline='') as file:
        file.write(_header(dataset) + '\n')
        frame.to_csv(file, index=False, float_format='%.17g', lineterminator='\n')


def _parse_header(line):
    if not line.startswith('#'):
        raise DataFormatError('missing "# task=... shape=..." header', line=1)
    fields = _header_tokens(line[1:])
    for key in ('task', 'shape'):
        if key not in fields:
            raise DataFormatError('header lacks "{:s}"'.format(key), line=1)
    if fields['task'] not in TASKS:
        raise DataFormatError('unknown task "{:s}"'.format(fields['task']), line=1)
    try:
        shape = tuple(int(s) for s in fields.pop('shape').split('x'))
    except ValueError:
        raise DataFormatError('malformed shape', line=1) from None
    if not shape or min(shape) < 1:
        raise DataFormatError('malformed shape', line=1)
    task = fields.pop('task')
    metadata = {key: _parse_value(value) for key, value in fields.items()}
    return task, shape, metadata


def read_csv(path):
    """
    Read dataset from CSV written by write_csv.

    Args:

        path (str) - file path

    Returns:

        dataset (Dataset)

    """
    with open(path, 'r') as file:
        lines = file.read().splitlines()
    if not lines:
        raise DataFormatError('empty file', line=1)
    task, shape, metadata = _parse_header(lines[0])
    n_columns = int(np.prod(shape)) + 1

    if len(lines) < 2:
        raise DataFormatError('missing column header', line=2)
    if len(lines[1].split(',')) != n_columns:
        raise DataFormatError('expected {:d} columns for shape {}'.format(n_columns, shape), line=2)
    rows = [(number, line) for number, line in enumerate(lines[2:], start=3) if line.strip()]
    if not rows:
        raise DataFormatError('no data rows', line=3)
    for number, line in rows:
        fields = line.split(',')
        if len(fields) != n_columns:
            raise DataFormatError('expected {:d} fields, got {:d}'.format(
                n_columns, len(fields)), line=number)
        for field in fields:
            try:
                float(field)
            except ValueError:
                raise DataFormatError('non-numeric value "{:s}"'.format(field), line=number) from None

    frame = pd.read_csv(path, skiprows=1, float_precision='round_trip', skip_blank_lines=True)
    values = frame.to_numpy()
    if not np.all(np.isfinite(values.astype(np.float64))):
        bad = int(np.argmax(~np.all(np.isfinite(values.astype(np.float64)), axis=1)))
        raise DataFormatError('non-finite value', line=rows[bad][0])
    inputs = values[:, :-1].astype(np.float64).reshape((len(frame),) + shape)
    targets = frame['y'].to_numpy()
    try:
        return Dataset(inputs, targets, task, metadata)
    except ValueError as error:
        raise DataFormatError(str(error), line=3) from None
