"""Exception types shared across the package.

The command line tool maps these onto process exit codes, so library code
should raise the most specific class that applies:

* ``ConfigError``  -- bad configuration or unusable argument combinations
* ``DataError``    -- missing or mismatched inputs discovered at run time
* ``NumericError`` -- a computation produced values it cannot continue with
"""


class ConfigError(Exception):
    pass


class DataError(Exception):
    pass


class NumericError(ArithmeticError):
    pass
