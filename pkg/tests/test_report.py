import io

from PIL import Image

from trainfractal.fracdim import BoxCount, BoxCountResult
from trainfractal.report import save_boxcount_figure, save_zoom_dimension_figure


def test_boxcount_figure_is_valid_png(tmp_path):
    entries = [BoxCount(s, max(1, 256 // s), (256 // s + 1) ** 2)
               for s in (1, 2, 4, 8, 16)]
    result = BoxCountResult(entries=entries, dimension=1.0, fit_r2=0.999,
                            usable_sizes=4)
    path = tmp_path / "fit.png"
    save_boxcount_figure(result, path)
    img = Image.open(io.BytesIO(path.read_bytes()))
    assert img.size[0] > 100 and img.size[1] > 100


def test_zoom_dimension_figure_is_valid_png(tmp_path):
    path = tmp_path / "dims.png"
    save_zoom_dimension_figure([1.2, 1.4, 1.3, 1.5], 1.35, path)
    img = Image.open(io.BytesIO(path.read_bytes()))
    assert img.format == "PNG"
