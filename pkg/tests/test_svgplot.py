import xml.etree.ElementTree as ET

from spinres.svgplot import Series, gnuplot_script, line_plot, nice_ticks

NS = "{http://www.w3.org/2000/svg}"


def test_nice_ticks():
    assert nice_ticks(0, 200) == [0, 50, 100, 150, 200]
    ticks = nice_ticks(0.0, 1.0)
    assert len(ticks) == 6
    assert [round(t, 12) for t in ticks] == [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
    assert nice_ticks(3, 3) == [3]


def test_plot_is_valid_and_deterministic():
    s = [Series([0, 1, 2], [7.7, 8.2, 7.7], "model"), Series([0, 2], [7.8, 7.6], "data", "points")]
    a = line_plot(s, "B (mT)", "FWHM (MHz)", "t & t")
    assert a == line_plot(s, "B (mT)", "FWHM (MHz)", "t & t")
    root = ET.fromstring(a)
    assert root.tag == NS + "svg"
    assert len(root.findall(NS + "polyline")) == 1
    assert len(root.findall(NS + "circle")) == 2
    texts = [t.text for t in root.iter(NS + "text")]
    assert "B (mT)" in texts and "FWHM (MHz)" in texts and "t & t" in texts


def test_single_point_and_flat():
    root = ET.fromstring(line_plot([Series([5.0], [7.746])]))
    assert len(root.findall(NS + "circle")) == 1
    ET.fromstring(line_plot([Series([0, 1, 2], [1, 1, 1])]))
    ET.fromstring(line_plot([]))


def test_gnuplot_script():
    text = gnuplot_script("sweep.csv", [(1, 2)], "B", "FWHM", "out.svg", ["model"])
    assert "set datafile separator ','" in text
    assert "'sweep.csv' using 1:2 with lines title 'model'" in text
