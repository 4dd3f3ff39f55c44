"""
Module de visualisation des balayages débit-distorsion
"""

import plotly.express as px
import plotly.graph_objects as go
import pandas as pd
from pathlib import Path
from typing import Tuple, Union

from modules.metrics import UNIFORM_SUFFIX


def _series_label(df: pd.DataFrame) -> pd.Series:
    return df['mode'] + ', λ=' + df['lambda'].astype(str)


def _decomposition(df: pd.DataFrame) -> pd.Series:
    uniform = df['mode'].str.endswith(UNIFORM_SUFFIX)
    return uniform.map({True: 'U-WL', False: 'CA-WL'})


def create_sweep_charts(df: pd.DataFrame) -> Tuple[go.Figure, go.Figure]:
    """
    Crée les courbes taille de fichier et PSNR_LP_t par niveau

    Args:
        df: Tableau issu du balayage (colonnes level, mode, lambda,
            file_size_bytes, psnr_lp_t_db)

    Returns:
        (figure des tailles, figure des PSNR)
    """
    data = df.copy()
    data['série'] = _series_label(data)
    data['décomposition'] = _decomposition(data)
    data = data.sort_values(['série', 'level'])

    fig1 = px.line(data, x='level', y='file_size_bytes', color='série', line_dash='décomposition', markers=True,
                   title='Taille du fichier par niveau de décomposition')
    fig1.update_layout(
        xaxis_title='Niveaux de décomposition',
        yaxis_title='Taille (octets)',
        hovermode='x unified',
        template='plotly_white'
    )

    # les valeurs infinies (sans perte) ne sont pas tracées
    finite = data[data['psnr_lp_t_db'] != float('inf')]
    fig2 = px.line(finite, x='level', y='psnr_lp_t_db', color='série', line_dash='décomposition', markers=True,
                   title='PSNR_LP_t de la couche de base par niveau')
    fig2.update_layout(
        xaxis_title='Niveaux de décomposition',
        yaxis_title='PSNR_LP_t (dB)',
        hovermode='x unified',
        template='plotly_white'
    )

    return fig1, fig2


def write_sweep_charts(df: pd.DataFrame, path: Union[str, Path]) -> Path:
    """Écrit les deux figures dans un seul fichier HTML autonome"""
    fig1, fig2 = create_sweep_charts(df)
    path = Path(path)
    with path.open('w', encoding='utf-8') as handle:
        handle.write(fig1.to_html(full_html=False, include_plotlyjs='cdn'))
        handle.write(fig2.to_html(full_html=False, include_plotlyjs=False))
    return path
