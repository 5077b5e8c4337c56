from .runner import (Scenario, SweepResult, SweepRow, design_and_evaluate,
                     run_realization, run_sweep, signal_path_check)
from .scenarios import PRESETS, load_scenarios, preset
from .io import emit_results, read_results, read_manifest, write_manifest

__all__ = ['Scenario', 'SweepResult', 'SweepRow', 'design_and_evaluate',
           'run_realization', 'run_sweep', 'signal_path_check', 'PRESETS',
           'load_scenarios', 'preset', 'emit_results', 'read_results',
           'read_manifest', 'write_manifest']
