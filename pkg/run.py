"""
Command-line entry point.

Usage:
    python run.py gen-data --out data/toy
    python run.py train --data data/toy --out runs/ce --seed 7
    python run.py train --phase scst --init runs/ce/checkpoint.xlck --out runs/scst
    python run.py eval --checkpoint runs/ce/checkpoint.xlck --data data/toy --beam 3
    python run.py dump-attention --checkpoint runs/ce/checkpoint.xlck --data data/toy --out trace.json
    python run.py ablate --steps 300 --out ablation.csv
"""
from cli import create_cli

cli = create_cli()

if __name__ == '__main__':
    cli()
