"""Acceptance: all three figure kinds render from the golden benchmark CSVs."""

import numpy as np

from qorbit_plot import PlotSpec, load_trace, render


def report(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def _endpoints_match(fig, data) -> bool:
    ax = fig.axes[0]
    xs, ys, zs = ax.lines[0].get_data_3d()
    return (
        xs[0] == data["bx"][0]
        and xs[-1] == data["bx"][-1]
        and ys[0] == data["by"][0]
        and ys[-1] == data["by"][-1]
        and zs[0] == data["bz"][0]
        and zs[-1] == data["bz"][-1]
    )


def test_criterion_7_renders_golden_csvs(tmp_path, golden_csv_51, golden_csv_52):
    results = []
    for tag, csv in (("pure", golden_csv_51), ("mixed", golden_csv_52)):
        data = load_trace(csv)
        fig = render(
            PlotSpec(kind="bloch3d", csv_paths=(csv,), out_path=str(tmp_path / f"{tag}_bloch.png"))
        )
        results.append((f"{tag} bloch3d endpoints", _endpoints_match(fig, data)))
        render(PlotSpec(kind="field", csv_paths=(csv,), out_path=str(tmp_path / f"{tag}_field.png")))
        results.append((f"{tag} field rendered", (tmp_path / f"{tag}_field.png").stat().st_size > 0))
    render(
        PlotSpec(
            kind="perf",
            csv_paths=(golden_csv_51, golden_csv_52),
            labels=("pure", "mixed"),
            out_path=str(tmp_path / "perf.png"),
        )
    )
    results.append(("perf overlay rendered", (tmp_path / "perf.png").stat().st_size > 0))

    mixed = load_trace(golden_csv_52)
    radius = np.sqrt(mixed["bx"] ** 2 + mixed["by"] ** 2 + mixed["bz"] ** 2)
    results.append(("mixed trajectory within radius 0.6", bool(np.max(radius) < 0.6)))

    ok = all(flag for _, flag in results)
    report(
        "criterion 7 (figure rendering)",
        ok,
        "; ".join(f"{name}: {flag}" for name, flag in results),
    )
