import logging
import sys


def setup_log(debug=False, log_file=None):
    """
    Set up logging for the command line. Records go to stderr so csv and json
    written to stdout stay clean.

    Args:
        debug: Whether to log debug statements
        log_file: Optional path to also write the log to
    """
    default = "%(name)s [%(levelname)s] %(message)s"

    level = logging.DEBUG if debug else logging.INFO
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file is not None:
        handlers.append(logging.FileHandler(log_file, mode='a'))
    logging.basicConfig(format=default, level=level, handlers=handlers)

    # basicConfig is a no-op once configured, the package level still follows the latest call
    logging.getLogger('study_resolv').setLevel(level)

    # Set all ignored modules to be quiet.
    ignore_modules = ['numexpr', 'scipy']
    for name in logging.Logger.manager.loggerDict.keys():
        if any([m in name for m in ignore_modules]):
            logger = logging.getLogger(name)
            logger.setLevel(logging.CRITICAL)
