# Sphinx configuration for darth-pum-sim
import os
import sys
sys.path.insert(0, os.path.abspath('..'))

from importlib.metadata import PackageNotFoundError, version as _version

project = 'darth_pum'
copyright = '2025, Mickael Burguet'
author = 'Mickael Burguet'

try:
    release = _version('darth-pum-sim')
except PackageNotFoundError:
    release = '0.1.0'

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.napoleon",
    "sphinx.ext.viewcode",
    "sphinx.ext.mathjax",
    "sphinx_autodoc_typehints",
]

autodoc_member_order = 'bysource'
autodoc_default_options = {
    'members': True,
    'undoc-members': False,
}
# Docstrings use reST field lists and double-backtick literals
napoleon_google_docstring = False
napoleon_numpy_docstring = False

templates_path = ['_templates']
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

html_theme = 'sphinx_rtd_theme'
html_theme_options = {
    'prev_next_buttons_location': 'bottom',
    'collapse_navigation': False,
    'navigation_depth': 3,
}
