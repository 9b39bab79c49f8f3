import xml.etree.ElementTree as ET

from setdyn import make_model
from setdyn.continuation import sweep
from setdyn.geometry import WorkingDomain
from setdyn.minimal import contract_to_fixed_cover, refine_minimal_sets
from setdyn.plot import covers_svg, report_svg

NS = "{http://www.w3.org/2000/svg}"
DOM = WorkingDomain((-4.0,), (4.0,))


def rects(svg):
    return ET.fromstring(svg).findall(f"{NS}rect")


def test_single_interval_one_rect():
    fc = contract_to_fixed_cover(make_model("contraction", L=0.5, eps=0.1), WorkingDomain((-1.0,), (1.0,)), 8)
    assert len(rects(covers_svg([fc.approximation]))) == 1


def test_one_rect_per_piece():
    sets = refine_minimal_sets(make_model("merging", lam=0.5), DOM, 7)
    assert len(rects(covers_svg(sets))) == 2


def test_2d_covers():
    from setdyn.geometry import BoxCover
    from setdyn.minimal import MinimalSetApproximation

    c = BoxCover(WorkingDomain((-1.0, -1.0), (1.0, 1.0)), 3, [[1, 1], [2, 5], [6, 6]])
    assert len(rects(covers_svg([MinimalSetApproximation(c, "forward")]))) == 3


def test_empty_list():
    root = ET.fromstring(covers_svg([]))
    assert root.tag == f"{NS}svg"


def test_report_markers():
    rep = sweep(make_model("merging", lam=0.0), "lam", [0.0, 0.1, 0.2], DOM, 7)
    root = ET.fromstring(report_svg(rep))
    lines = root.findall(f"{NS}line")
    dashed = [ln for ln in lines if ln.get("stroke-dasharray") == "4 3"]
    assert len(dashed) == 1
    assert "merge_candidate" in dashed[0].find(f"{NS}title").text
