from os.path import join
from os import makedirs
import numpy as np

from .settings import plt, colors, labelsize


def _label(arm, result):
    return result.get('label') or arm


def _color(arm):
    return colors.get(arm, 'k')


def save_figure(fig, path):
    """ Save <fig> as SVG without date metadata and close it. """
    fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)


def reliability_figure(report):
    """
    Reliability diagram with one panel per classification arm.

    Bars show per-bin accuracy at the bin centres. The dashed diagonal marks perfect calibration.

    Args:

        report (dict) - evaluation report

    Returns:

        fig (matplotlib.figure.Figure) - None if no arm has a reliability table

    """
    arms = [(arm, r) for arm, r in report['arms'].items() if r.get('reliability')]
    if not arms:
        return None

    fig, axes = plt.subplots(1, len(arms), figsize=(2.2 * len(arms), 2.4), squeeze=False)
    for ax, (arm, result) in zip(axes[0], arms):
        table = result['reliability']
        n_bins = len(table['counts'])
        centres = np.array(table['edges']) - 0.5 / n_bins
        heights = [0. if a is None else a for a in table['accuracy']]
        ax.bar(centres, heights, width=1. / n_bins, color=_color(arm),
               edgecolor='k', linewidth=0.5)
        ax.plot([0, 1], [0, 1], '--k', linewidth=0.75)
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1)
        ax.set_xlabel('Confidence')
        ax.set_title('{:s} (ECE={:.3f})'.format(_label(arm, result), result['metrics']['ece']),
                     fontsize=labelsize)
    axes[0][0].set_ylabel('Accuracy')
    fig.tight_layout()
    return fig


def _aug_columns(report):
    columns = []
    for result in report['arms'].values():
        trajectory = result.get('trajectory') or {}
        for column, values in trajectory.items():
            if column.startswith('aug_') and column not in columns:
                if any(v is not None for v in values):
                    columns.append(column)
    return columns


def phi_trajectory_figure(report):
    """ Augmentation parameter summaries against optimizer step, one panel per coordinate. """
    columns = _aug_columns(report)
    if not columns:
        return None

    fig, axes = plt.subplots(1, len(columns), figsize=(2.2 * len(columns), 2.), squeeze=False)
    for ax, column in zip(axes[0], columns):
        for arm, result in report['arms'].items():
            trajectory = result.get('trajectory') or {}
            if column not in trajectory:
                continue
            values = [np.nan if v is None else v for v in trajectory[column]]
            ax.plot(trajectory['step'], values, '-', color=_color(arm),
                    linewidth=1, label=_label(arm, result))
        ax.set_xlabel('Step')
        ax.set_ylabel(column[len('aug_'):])
    axes[0][-1].legend(frameon=False, fontsize=labelsize - 2)
    fig.tight_layout()
    return fig


def curves_figure(report):
    """ Training loss and the logged test metric against optimizer step. """
    arms = [(arm, r) for arm, r in report['arms'].items() if r.get('trajectory')]
    if not arms:
        return None

    fig, (train_ax, test_ax) = plt.subplots(1, 2, figsize=(4.4, 2.))
    test_column = None
    for arm, result in arms:
        trajectory = result['trajectory']
        train_ax.plot(trajectory['step'], trajectory['train_loss'], '-',
                      color=_color(arm), linewidth=1, label=_label(arm, result))
        for column in trajectory:
            if column.startswith('test_'):
                test_column = column
                values = [np.nan if v is None else v for v in trajectory[column]]
                test_ax.plot(trajectory['step'], values, '-', color=_color(arm), linewidth=1)
    train_ax.set_xlabel('Step')
    train_ax.set_ylabel('Train loss')
    test_ax.set_xlabel('Step')
    test_ax.set_ylabel(test_column[len('test_'):] if test_column else 'Test metric')
    train_ax.legend(frameon=False, fontsize=labelsize - 2)
    fig.tight_layout()
    return fig


def metrics_table(report):
    """ Returns a markdown table of metrics and PAC-Bayes bounds per arm. """
    keys = []
    for result in report['arms'].values():
        keys += [key for key in result['metrics'] if key not in keys]
    header = ['Arm'] + keys + ['KL', 'PAC-Bayes bound']
    lines = ['| ' + ' | '.join(header) + ' |',
             '|' + '---|' * len(header)]
    for arm, result in report['arms'].items():
        row = [_label(arm, result)]
        for key in keys:
            value = result['metrics'].get(key)
            row.append('' if value is None else '{:.4f}'.format(value))
        bound = result.get('pac_bayes') or {}
        row.append('{:.4g}'.format(bound['kl_total']) if 'kl_total' in bound else '')
        row.append('{:.4f}'.format(bound['bound']) if 'bound' in bound else '')
        lines.append('| ' + ' | '.join(row) + ' |')
    return '\n'.join(lines) + '\n'


def emit_report(report, out_dir):
    """
    Write report figures and summary.

    Args:

        report (dict) - evaluation report

        out_dir (str) - created if missing

    Returns:

        paths (list of str) - written files

    """
    makedirs(out_dir, exist_ok=True)
    paths = []
    for name, build in (('reliability.svg', reliability_figure),
                        ('phi_trajectory.svg', phi_trajectory_figure),
                        ('curves.svg', curves_figure)):
        fig = build(report)
        if fig is not None:
            save_figure(fig, join(out_dir, name))
            paths.append(join(out_dir, name))

    path = join(out_dir, 'summary.md')
    with open(path, 'w') as file:
        file.write('# Results ({:s})\n\n'.format(report['task']))
        file.write(metrics_table(report))
    paths.append(path)
    return paths
