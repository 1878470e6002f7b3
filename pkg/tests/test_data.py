import numpy as np
import pytest

from optima.exceptions import DataFormatError
from optima.data.dataset import Dataset
from optima.data.generators import gen_synthetic_regression, regression_mean
from optima.data.glyphs import GLYPHS, render_glyph, gen_glyph_classification
from optima.data.io import write_csv, read_csv
from optima.data.corruption import corrupt_dataset


class TestDataset:

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((3, 1)), np.zeros(2), 'regression')

    def test_invalid_labels(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((2, 1)), [0.5, 1.], 'classification')
        with pytest.raises(ValueError):
            Dataset(np.zeros((2, 1)), [0, 3], 'classification', dict(n_classes=3))

    def test_unknown_task(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((2, 1)), [0, 1], 'ranking')

    def test_subset_and_digest(self):
        data = Dataset(np.arange(8.).reshape(4, 2), [0, 1, 1, 0], 'classification')
        subset = data.subset([1, 2])
        assert subset.size == 2 and subset.n_classes == 2
        assert data.digest() == Dataset(data.inputs.copy(), data.targets, data.task).digest()
        assert data.digest() != subset.digest()


class TestSyntheticRegression:

    def test_deterministic(self):
        a, b = gen_synthetic_regression(20, 30, seed=4), gen_synthetic_regression(20, 30, seed=4)
        assert a[0] == b[0] and a[1] == b[1]
        assert not gen_synthetic_regression(20, 30, seed=5)[0] == a[0]

    def test_shapes(self):
        train, test = gen_synthetic_regression(50, 1000, seed=0)
        assert train.inputs.shape == (50, 1) and test.size == 1000
        assert train.metadata['split'] == 'train'
        assert np.all(np.abs(train.inputs) <= 3.)

    def test_noise_level(self):
        """ Residuals around the mean function have variance 0.2^2 + 0.15^2 E[sin^2 x]. """
        _, test = gen_synthetic_regression(1, 20000, seed=1)
        x = test.inputs[:, 0]
        residual = test.targets - regression_mean(x)
        expected = 0.2**2 + 0.15**2 * np.mean(np.sin(x)**2)
        np.testing.assert_allclose(np.var(residual), expected, rtol=0.05)

    def test_independent_splits(self):
        train, test = gen_synthetic_regression(2000, 2000, seed=2)
        assert abs(np.corrcoef(train.inputs[:, 0], test.inputs[:, 0])[0, 1]) < 0.05

    def test_invalid_counts(self):
        with pytest.raises(ValueError):
            gen_synthetic_regression(0, 10)


class TestGlyphs:

    def test_templates(self):
        for name in GLYPHS:
            image = render_glyph(name, 16)
            assert set(np.unique(image)) == {0., 1.}
        with pytest.raises(ValueError):
            render_glyph('circle', 16)

    def test_no_jitter(self):
        data = gen_glyph_classification(8, size=12, n_classes=4, pose_jitter=0.)
        assert data.targets.tolist() == [0, 1, 2, 3, 0, 1, 2, 3]
        np.testing.assert_array_equal(data.inputs[5], render_glyph('cross', 12))
        assert data.n_classes == 4

    def test_deterministic(self):
        a = gen_glyph_classification(6, seed=2)
        b = gen_glyph_classification(6, seed=2)
        assert a == b
        assert a.digest() != gen_glyph_classification(6, seed=3).digest()

    def test_invalid(self):
        with pytest.raises(ValueError):
            gen_glyph_classification(4, size=6)
        with pytest.raises(ValueError):
            gen_glyph_classification(4, n_classes=5)
        with pytest.raises(ValueError):
            gen_glyph_classification(4, pose_jitter=-1.)


class TestCsv:

    def test_regression_round_trip(self, tmp_path):
        """ Writing what was read reproduces the file byte for byte. """
        train, _ = gen_synthetic_regression(25, 5, seed=7)
        first, second = str(tmp_path / 'a.csv'), str(tmp_path / 'nested' / 'b.csv')
        write_csv(first, train)
        loaded = read_csv(first)
        assert loaded == train
        assert loaded.metadata == train.metadata
        write_csv(second, loaded)
        with open(first, 'rb') as a, open(second, 'rb') as b:
            assert a.read() == b.read()

    def test_raster_round_trip(self, tmp_path):
        data = gen_glyph_classification(6, size=8, seed=1)
        path = str(tmp_path / 'glyphs.csv')
        write_csv(path, data)
        loaded = read_csv(path)
        assert loaded == data
        assert loaded.input_shape == (8, 8)
        assert loaded.metadata['pose_jitter'] == 0.5

    def test_header(self, tmp_path):
        path = str(tmp_path / 'data.csv')
        write_csv(path, gen_synthetic_regression(2, 2, seed=3)[0])
        with open(path) as file:
            header = file.readline()
        assert header.startswith('# task=regression shape=1 seed=3 generator=synthetic-regression')

    def test_metadata_with_whitespace(self, tmp_path):
        """ String metadata holding spaces, quotes or number-like text survives a round trip. """
        train, _ = gen_synthetic_regression(4, 2, seed=3)
        train.metadata.update(source='/data/my runs/train set.csv', note='say "hi"',
                              label='17', tags={'kind': 'a b'}, flag='true')
        first, second = str(tmp_path / 'a.csv'), str(tmp_path / 'b.csv')
        write_csv(first, train)
        loaded = read_csv(first)
        assert loaded.metadata == train.metadata
        write_csv(second, loaded)
        with open(first, 'rb') as a, open(second, 'rb') as b:
            assert a.read() == b.read()

    def test_malformed_header_token(self, tmp_path):
        path = tmp_path / 'bad.csv'
        path.write_text('# task=regression shape=1 oops\nx0,y\n1,2\n')
        with pytest.raises(DataFormatError) as error:
            read_csv(str(path))
        assert error.value.line == 1

    @pytest.mark.parametrize('text, line', [
        ('x0,y\n1,2\n', 1),
        ('# task=ranking shape=1\nx0,y\n1,2\n', 1),
        ('# task=regression shape=0\nx0,y\n1,2\n', 1),
        ('# task=regression shape=2\nx0,y\n1,2\n', 2),
        ('# task=regression shape=1\nx0,y\n', 3),
        ('# task=regression shape=1\nx0,y\n1,2\n3\n', 4),
        ('# task=regression shape=1\nx0,y\n1,2\n1,abc\n', 4),
        ('# task=regression shape=1\nx0,y\nnan,2\n', 3),
        ('# task=classification shape=1\nx0,y\n1,0.5\n', 3)])
    def test_malformed(self, tmp_path, text, line):
        path = tmp_path / 'bad.csv'
        path.write_text(text)
        with pytest.raises(DataFormatError) as error:
            read_csv(str(path))
        assert error.value.line == line


class TestCorruption:

    def test_zero_severity(self):
        train, _ = gen_synthetic_regression(10, 2)
        for kind in ('gaussian-noise', 'mean-shift'):
            corrupted = corrupt_dataset(train, kind, 0.)
            np.testing.assert_array_equal(corrupted.inputs, train.inputs)
            assert corrupted.metadata['corruption'] == kind
        glyphs = gen_glyph_classification(3, size=8)
        np.testing.assert_array_equal(corrupt_dataset(glyphs, 'extra-rotation', 0.).inputs, glyphs.inputs)

    def test_mean_shift(self):
        train, _ = gen_synthetic_regression(10, 2)
        corrupted = corrupt_dataset(train, 'mean-shift', 0.5)
        np.testing.assert_allclose(corrupted.inputs, train.inputs + 0.5)
        np.testing.assert_array_equal(corrupted.targets, train.targets)

    def test_gaussian_noise(self):
        train, _ = gen_synthetic_regression(5000, 2)
        a = corrupt_dataset(train, 'gaussian-noise', 0.3)
        b = corrupt_dataset(train, 'gaussian-noise', 0.3)
        np.testing.assert_array_equal(a.inputs, b.inputs)
        np.testing.assert_allclose(np.std(a.inputs - train.inputs), 0.3, rtol=0.05)

    def test_half_turn(self):
        """ Rotating either way by pi gives the 180 degree rotated raster. """
        data = gen_glyph_classification(4, size=9, pose_jitter=0.)
        corrupted = corrupt_dataset(data, 'extra-rotation', np.pi)
        for original, rotated in zip(data.inputs, corrupted.inputs):
            np.testing.assert_allclose(rotated, np.rot90(original, 2), atol=1e-9)

    def test_invalid(self):
        train, _ = gen_synthetic_regression(4, 2)
        with pytest.raises(ValueError):
            corrupt_dataset(train, 'blur', 1.)
        with pytest.raises(ValueError):
            corrupt_dataset(train, 'mean-shift', -1.)
        with pytest.raises(ValueError):
            corrupt_dataset(train, 'extra-rotation', 0.1)
