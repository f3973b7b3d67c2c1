#!/usr/bin/env python3
"""
permlim : études numériques de la limite des permanents de noyaux doublement stochastiques

Usage : python -m src.permlim <validate-cost|solve-bridge|converge|balance-study> --config <fichier.ini>
"""

import argparse
import sys
from typing import Optional, Sequence

from dotenv import load_dotenv
from loguru import logger

from src.lab.config import load_run_config
from src.lab.study import StudyRunner
from src.utils.errors import PermlimError
from src.utils.logs import setup_logging

SUBCOMMANDS = {
    "validate-cost": "Vérifie les hypothèses du coût (symétrie, positivité, ...)",
    "solve-bridge": "Résout le potentiel de Schrödinger et l'écrit en CSV",
    "converge": "Étude de convergence de D_n vers la limite de Fredholm",
    "balance-study": "Diagnostics de l'équilibrage sur n_list (sans permanents)",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="fichier INI de l'étude")
    common.add_argument("--log-level", default=None, help="niveau loguru (défaut: PERMLIM_LOG_LEVEL ou INFO)")
    common.add_argument("--log-dir", default=None, help="dossier des logs (défaut: PERMLIM_LOG_DIR ou data/logs)")

    parser = argparse.ArgumentParser(prog="permlim", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in SUBCOMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def run(command: str, runner: StudyRunner) -> int:
    if command == "validate-cost":
        _, code = runner.run_validate_cost()
        return code
    if command == "solve-bridge":
        runner.run_solve_bridge()
    elif command == "converge":
        runner.run_converge()
    else:
        runner.run_balance_study()
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Point d'entrée ; renvoie le code de sortie"""
    load_dotenv()
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # Le code 2 d'argparse est réservé à l'échec de validation du coût
        return 0 if e.code in (0, None) else 1
    log_file = setup_logging(args.log_level, args.log_dir)
    logger.debug(f"permlim {args.command} --config {args.config} (log: {log_file})")

    try:
        config = load_run_config(args.config)
        return run(args.command, StudyRunner(config))
    except PermlimError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
