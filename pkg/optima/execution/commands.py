import sys
import json
import logging
from os import environ, makedirs, cpu_count, getcwd
from os.path import join, exists
from time import time
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor

from .. import __version__
from ..exceptions import (ConfigError, DataFormatError, TrainingError, NonFiniteError,
                          DegenerateLikelihoodError, NotPositiveDefiniteError,
                          VerificationError)
from ..theory.suite import run_suite, available_checks
from ..figures.report import emit_report
from .arguments import RunArguments
from .config import RunConfig, ARM_LABELS
from .runs import (write_data, load_data, data_paths, arm_seed, train_arm,
                   evaluate_arm, load_arm)


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VERIFICATION = 4


def worker_count(n_tasks):
    """ Number of worker processes, capped by OPTIMA_THREADS. """
    limit = environ.get('OPTIMA_THREADS')
    try:
        limit = int(limit) if limit else (cpu_count() or 1)
    except ValueError:
        raise ConfigError('must be an integer', 'OPTIMA_THREADS') from None
    return max(1, min(limit, n_tasks))


def _write_json(path, data):
    with open(path, 'w') as file:
        json.dump(data, file, indent=1)


# =============================== COMMANDS ====================================


def cmd_gen_data(config, out_dir):
    """
    Write train and test CSV datasets to <out_dir>/data.

    Args:

        config (RunConfig)

        out_dir (str) - created if missing

    Returns:

        train, test (Dataset)

    """
    train, test = write_data(config, out_dir)
    print('Wrote {:d} training and {:d} test examples to {:s}.'.format(
        train.size, test.size, join(out_dir, 'data')))
    return train, test


def cmd_train(config, out_dir):
    """
    Train every configured arm. Each arm writes <out_dir>/<arm>/{checkpoint.json, trace.csv, config.json}.

    Arms run in parallel worker processes when more than one worker is allowed.

    Returns:

        summaries (list of dict) - arm, steps and runtime per arm

    """
    makedirs(out_dir, exist_ok=True)
    load_data(config, out_dir)
    train_path, test_path = data_paths(config, out_dir)
    tasks = [dict(config=config.to_dict(), arm=arm, out_dir=out_dir,
                  train_path=train_path, test_path=test_path) for arm in config.arms]

    workers = worker_count(len(tasks))
    if workers == 1:
        summaries = [train_arm(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            summaries = list(executor.map(train_arm, tasks))

    _write_json(join(out_dir, 'timing.json'),
                OrderedDict((s['arm'], s['runtime']) for s in summaries))
    for summary in summaries:
        logger.info('%s: %d steps in %.1f s.', ARM_LABELS[summary['arm']],
                    summary['steps'], summary['runtime'])
    return summaries


def cmd_eval(config, out_dir):
    """
    Evaluate every trained arm and write <out_dir>/report.json.

    Returns:

        report (OrderedDict)

    """
    start = time()
    train, test = load_data(config, out_dir)
    arms = OrderedDict()
    for arm in config.arms:
        if not exists(join(out_dir, arm, 'checkpoint.json')):
            raise ConfigError('arm "{}" has not been trained in {}'.format(arm, out_dir), 'baselines')
        checkpoint, trace = load_arm(out_dir, arm)
        arms[arm] = evaluate_arm(config, checkpoint, train, test, trace)
        logger.info('%s: %s', ARM_LABELS[arm], ', '.join(
            '{}={:.4g}'.format(k, v) for k, v in arms[arm]['metrics'].items()))

    timing = OrderedDict(eval=time() - start)
    if exists(join(out_dir, 'timing.json')):
        with open(join(out_dir, 'timing.json'), 'r') as file:
            timing['train'] = json.load(file)
    theory = []
    if exists(join(out_dir, 'verify.json')):
        with open(join(out_dir, 'verify.json'), 'r') as file:
            theory = json.load(file)

    report = OrderedDict(version=__version__,
                         config=config.to_dict(),
                         seeds=OrderedDict(data=config.data['seed'],
                                           arms=OrderedDict((a, arm_seed(config, a)) for a in arms)),
                         task=test.task,
                         arms=arms,
                         theory=theory,
                         timing=timing)
    _write_json(join(out_dir, 'report.json'), report)
    print('Report written to {:s}.'.format(join(out_dir, 'report.json')))
    return report


def _print_shrinkage(report):
    print('     K   ratio         1/K')
    for row in report.quantities['table']:
        if row['prior_var'] == max(r['prior_var'] for r in report.quantities['table']):
            print('{:6d}   {:.9f}   {:.9f}'.format(row['K'], row['ratio'], 1. / row['K']))


def cmd_verify(names=None, seed=0, out_dir=None, list_only=False):
    """
    Run theory checks.

    Args:

        names (list of str) - checks to run, defaults to every check

        seed (int)

        out_dir (str) - if given, reports are written to <out_dir>/verify.json

        list_only (bool) - print available checks without running them

    Returns:

        reports (list of TheoryReport)

    Raises:

        VerificationError - if a hard check fails

    """
    if list_only:
        for name, kind in available_checks().items():
            print('{:<18s} {:s}'.format(name, kind))
        return []
    unknown = [name for name in names or [] if name not in available_checks()]
    if unknown:
        raise ConfigError('unknown checks {}'.format(', '.join(unknown)), '--checks')
    reports = run_suite(names, seed=seed)

    for report in reports:
        print('{:<18s} {:s}'.format(report.name, report.status.upper()))
        if report.name == 'shrinkage':
            _print_shrinkage(report)
    if out_dir is not None:
        makedirs(out_dir, exist_ok=True)
        _write_json(join(out_dir, 'verify.json'), [r.to_dict() for r in reports])

    failed = [report.name for report in reports if report.failed]
    if failed:
        raise VerificationError(failed)
    return reports


def cmd_report(report_path, out_dir):
    """
    Write report figures and a markdown summary.

    Returns:

        paths (list of str) - written files

    """
    try:
        with open(report_path, 'r') as file:
            report = json.load(file, object_pairs_hook=OrderedDict)
    except (OSError, ValueError) as error:
        raise ConfigError('cannot read report ({})'.format(error), 'report') from None
    for key in ('arms', 'task'):
        if key not in report:
            raise ConfigError('missing key', 'report.' + key)
    paths = emit_report(report, out_dir)
    for path in paths:
        print('Wrote {:s}.'.format(path))
    return paths


# ================================= MAIN ======================================


def _load_config(args):
    if args['config'] is None:
        raise ConfigError('a configuration file is required', '--config')
    config = RunConfig.load(args['config'])
    if args['seed'] is not None:
        config = config.with_seed(args['seed'])
    return config


def run(args):
    """ Dispatch parsed arguments to a command. """
    command = args['command']
    out_dir = args['out'] or getcwd()
    if command == 'gen-data':
        cmd_gen_data(_load_config(args), out_dir)
    elif command == 'train':
        cmd_train(_load_config(args), out_dir)
    elif command == 'eval':
        cmd_eval(_load_config(args), out_dir)
    elif command == 'verify':
        seed = 0 if args['seed'] is None else args['seed']
        cmd_verify(args['checks'], seed=seed, out_dir=args['out'], list_only=args['list'])
    elif command == 'report':
        report_path = args['report'] or join(out_dir, 'report.json')
        cmd_report(report_path, out_dir)


def main(argv=None):
    """
    Command line entry point.

    Returns:

        code (int) - 0 success, 2 configuration or data error, 3 numerical failure, 4 failed verification

    """
    args = RunArguments(argv, prog='optima', description='Learned augmentation distributions by variational inference.')
    logging.basicConfig(level=logging.DEBUG if args['verbose'] else logging.INFO,
                        format='%(levelname)s %(name)s: %(message)s')

    start_time = time()
    try:
        run(args)
    except (ConfigError, DataFormatError, OSError) as error:
        logger.error('%s', error)
        return EXIT_CONFIG
    except VerificationError as error:
        logger.error('%s', error)
        return EXIT_VERIFICATION
    except (TrainingError, NonFiniteError, DegenerateLikelihoodError,
            NotPositiveDefiniteError) as error:
        logger.error('%s', error)
        return EXIT_NUMERIC

    runtime = time() - start_time
    print('\n{:s} COMPLETED IN {:0.2f} s.\n'.format(args['command'].upper(), runtime))
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
