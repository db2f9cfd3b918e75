import math
import sys

import pytest


def svg(*elements: str, size: int = 240) -> str:
    body = "\n  ".join(elements)
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
            f'viewBox="0 0 {size} {size}">\n  {body}\n</svg>')


def polar(cx, cy, r, bearing_deg):
    t = math.radians(bearing_deg)
    return cx + r * math.sin(t), cy - r * math.cos(t)


def line_from(cx, cy, r, bearing_deg, start=(None, None)):
    x0, y0 = (cx, cy) if start[0] is None else start
    x1, y1 = polar(x0, y0, r, bearing_deg)
    return f'<line x1="{x0}" y1="{y0}" x2="{x1:.6f}" y2="{y1:.6f}" stroke="black"/>'


@pytest.fixture
def make_svg():
    return svg


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.LINES, key=lambda l: int(l.split("criterion ")[1].split(":")[0])):
        terminalreporter.write_line(line)
