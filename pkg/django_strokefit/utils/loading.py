# encoding: utf-8

import importlib


def import_module_element(path):
    """
    Import ``package.module.attribute`` and return the attribute.
    Used for STROKEFIT_EXTERNAL_METRIC.
    """
    path_bits = path.split('.')
    if len(path_bits) < 2:
        raise ImportError("'{}' is not a dotted path to a module attribute.".format(path))
    # Cut off the attribute name at the end.
    module_attr = path_bits.pop()
    module_path = '.'.join(path_bits)
    module_itself = importlib.import_module(module_path)

    if not hasattr(module_itself, module_attr):
        raise ImportError("The Python module '%s' has no '%s' attribute." % (module_path, module_attr))

    return getattr(module_itself, module_attr)
