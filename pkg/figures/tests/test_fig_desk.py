"""End-to-end rendering from a full desk-scale dataset.

All five figures must render without error, which exercises their
embedded qualitative checks (overlapping rho=0 distance paths; the
recommendation regime's homogeneity sitting above no-recommendation at
every positive beta) against real sweep output.
"""

import pytest

pytest.importorskip("bubblefig")

from bubblefig import FIGURE_IDS, DataError, FigureSpec, render

# Filters needed on the desk grid: the panel grid and the scatter must be
# pinned to a single beta slice, the rest render from pooled tables.
DESK_FILTERS = {
    "f2_rho_gamma_grid": {"beta": "1"},
    "f4_scatter": {"beta": "1"},
}


@pytest.mark.parametrize("figure_id", FIGURE_IDS)
def test_renders_from_desk_dataset(figure_id, desk_dir, tmp_path):
    out = tmp_path / f"{figure_id}.svg"
    render(FigureSpec(figure_id, str(desk_dir), str(out), DESK_FILTERS.get(figure_id, {})))
    text = out.read_text()
    assert text.lstrip().startswith("<?xml") and "<svg" in text


def test_f2_requires_unambiguous_slice(desk_dir, tmp_path):
    with pytest.raises(DataError, match="beta"):
        render(FigureSpec("f2_rho_gamma_grid", str(desk_dir), str(tmp_path / "x.svg")))


def test_repeated_render_is_byte_identical(desk_dir, tmp_path):
    a = tmp_path / "a.svg"
    b = tmp_path / "b.svg"
    spec = dict(figure_id="f5_homogeneity", input_dir=str(desk_dir))
    render(FigureSpec(output=str(a), **spec))
    render(FigureSpec(output=str(b), **spec))
    assert a.read_bytes() == b.read_bytes()
    assert "dc:date" not in a.read_text()


def test_png_flag_writes_png(desk_dir, tmp_path):
    out = tmp_path / "f1.png"
    render(FigureSpec("f1_distance_paths", str(desk_dir), str(out), png=True))
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
