from argparse import ArgumentParser, ArgumentTypeError


COMMANDS = ('gen-data', 'train', 'eval', 'verify', 'report')


# ======================== ARGUMENT TYPE CASTING ==============================

def str2bool(arg):
     """ Convert <arg> to boolean. """
     if isinstance(arg, bool):
          return arg
     if arg.lower() in ('yes', 'true', 't', 'y', '1'):
          return True
     elif arg.lower() in ('no', 'false', 'f', 'n', '0'):
          return False
     else:
          raise ArgumentTypeError('Boolean value expected.')


def str2list(arg):
     """ Split comma-separated <arg> into a list of names. """
     names = [name.strip() for name in arg.split(',') if name.strip()]
     if not names:
          raise ArgumentTypeError('At least one name expected.')
     return names


# ======================== PARSE SCRIPT ARGUMENTS =============================


class RunArguments(ArgumentParser):
     """ Argument handler for the optima command line. """

     def __init__(self, argv=None, **kwargs):
          super().__init__(**kwargs)
          self.add_arguments()
          self.parse(argv)

     def __getitem__(self, key):
          """ Returns <key> argument value. """
          return self.args[key]

     def add_arguments(self):
          """ Add arguments. """

          # add position argument for command
          self.add_argument(
               'command',
               choices=COMMANDS,
               help='Command to run.')

          # add keyword argument for run configuration
          self.add_argument(
               '-c', '--config',
               help='Path to JSON run configuration.',
               type=str,
               default=None,
               required=False)

          # add keyword argument for output directory
          self.add_argument(
               '-o', '--out',
               help='Output directory, defaults to the working directory.',
               type=str,
               default=None,
               required=False)

          # add keyword argument for seed override
          self.add_argument(
               '-s', '--seed',
               help='Seed override for data, training and checks.',
               type=int,
               default=None,
               required=False)

          # add keyword argument for listing checks
          self.add_argument(
               '-l', '--list',
               help='List available theory checks without running them.',
               type=str2bool,
               nargs='?',
               const=True,
               default=False,
               required=False)

          # add keyword argument for check selection
          self.add_argument(
               '-k', '--checks',
               help='Comma-separated theory checks to run.',
               type=str2list,
               default=None,
               required=False)

          # add keyword argument for report path
          self.add_argument(
               '-r', '--report',
               help='Path to report JSON, defaults to <out>/report.json.',
               type=str,
               default=None,
               required=False)

          # add keyword argument for verbose logging
          self.add_argument(
               '-v', '--verbose',
               help='Debug-level logging.',
               type=str2bool,
               nargs='?',
               const=True,
               default=False,
               required=False)

     def parse(self, argv=None):
          """ Parse arguments. """
          self.args = vars(self.parse_args(argv))
