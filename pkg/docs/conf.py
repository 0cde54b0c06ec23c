# -*- coding: utf-8 -*-
#
# specpart documentation build configuration file.

import sys
import os

from unittest.mock import MagicMock


class Mock(MagicMock):
    @classmethod
    def __getattr__(cls, name):
        return Mock()

MOCK_MODULES = [
    'pandas',
    'scipy',
    'scipy.ndimage',
    'scipy.optimize',
    'scipy.sparse',
    'scipy.sparse.linalg',
    'scipy.special',
]
sys.modules.update((mod_name, Mock()) for mod_name in MOCK_MODULES)

sys.path.insert(0, os.path.abspath('..'))

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
    'sphinx.ext.napoleon',
]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'specpart'
copyright = u'2026, specpart developers'

version = __import__('specpart').get_version()
release = version

exclude_patterns = ['_build']
pygments_style = 'sphinx'
html_theme = 'alabaster'
htmlhelp_basename = 'specpartdoc'
