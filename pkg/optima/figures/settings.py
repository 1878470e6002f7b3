import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt

labelsize = 8
ticklabelsize = 7

# one color per arm, shared by every report figure
colors = {'no-aug': '#7f7f7f',
          'fixed-aug': '#1f77b4',
          'naive-aug': '#ff7f0e',
          'optima': '#d62728'}

plt.rcParams.update({
    'font.size': ticklabelsize,
    'font.family': 'sans-serif',
    'font.sans-serif': ['DejaVu Sans'],
    'axes.labelpad': 1,
    'axes.labelsize': labelsize,
    'axes.linewidth': 0.75,
    'axes.spines.top': False,
    'axes.spines.right': False,
    'xtick.labelsize': ticklabelsize,
    'ytick.labelsize': ticklabelsize,
    'xtick.major.size': 2.5,
    'ytick.major.size': 2.5,
    'xtick.major.pad': 1,
    'ytick.major.pad': 1,
    'legend.handlelength': 1.5,
    'lines.solid_capstyle': 'round',
    'savefig.pad_inches': 0.05,
    'savefig.transparent': True,
    # fixed element ids and text kept as text make SVG output byte-stable
    'svg.hashsalt': 'optima',
    'svg.fonttype': 'none'})
