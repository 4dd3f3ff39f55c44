"""
Module de création de tableaux texte pour la ligne de commande
"""

import math
from typing import Dict

import pandas as pd

from modules.utils import format_bytes, format_psnr


class TableGenerator:
    """
    Met en forme les résultats du codec pour l'affichage en console
    """

    @staticmethod
    def rate_table(report_df: pd.DataFrame) -> str:
        """Tableau des octets par section (BL, EL_k, mouvement, v, en-tête)"""
        df = report_df.copy()
        df['taille'] = df['bytes'].apply(format_bytes)
        df['bpp'] = df['bpp'].map(lambda x: f"{x:.4f}")
        return df[['section', 'bytes', 'taille', 'bpp']].to_string(index=False)

    @staticmethod
    def comparison_table(df: pd.DataFrame) -> str:
        """ΔPSNR_LP_t (dB) et Δtaille (%) du CA-WL par rapport au U-WL"""
        if df.empty:
            return "(aucune comparaison)"
        table = df.pivot_table(index='mode', columns='lambda', values=['delta_psnr_db', 'delta_size_percent'])
        return table.round(2).to_string()

    @staticmethod
    def sweep_table(df: pd.DataFrame) -> str:
        df = df.copy()
        df['psnr_lp_t_db'] = df['psnr_lp_t_db'].apply(format_psnr)
        return df.to_string(index=False)

    @staticmethod
    def depth_summary(histogram: Dict[int, int]) -> str:
        """Une ligne : nombre de trames par profondeur atteinte"""
        total = sum(histogram.values())
        if not total:
            return "profondeurs: -"
        parts = [f"{depth}: {count} ({100 * count / total:.0f}%)" for depth, count in histogram.items()]
        return "profondeurs: " + ", ".join(parts)


def summary_line(total: int, layers: Dict[str, int], psnr: float = math.nan) -> str:
    """Ligne de synthèse affichée après un encodage"""
    sizes = ", ".join(f"{name}={size}" for name, size in layers.items())
    line = f"total={total} octets ({sizes})"
    if not math.isnan(psnr):
        line += f", PSNR_LP_t={format_psnr(psnr)}"
    return line
