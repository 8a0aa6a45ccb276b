"""Trap-parameter table for the proposed sodium experiment and a rubidium variant."""
import math

from atomlaser.experiments import TrapExperiment, proposed, report, table_text

w = 2 * math.pi * 25
rb = TrapExperiment.from_species("Rb87", w, w, 7.0, 1e6, label="Rb87")
reports = [report(proposed()), report(rb)]
print(table_text(reports), end="")
for r in reports:
    print(f"{r.label}: coherent={r.coherent} single_mode={r.single_mode}")
