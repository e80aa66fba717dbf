# Sphinx configuration for the extvc documentation.
import os
import sys
from datetime import date

package_path = os.path.abspath('../..')
sys.path.insert(0, package_path)
os.environ['PYTHONPATH'] = ':'.join((package_path, os.environ.get('PYTHONPATH', '')))

import extvc  # noqa: E402

project = 'extvc'
copyright = f'{date.today().year}'
author = 'extvc developers'
version = 'v' + extvc.__version__
release = version

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.coverage',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
    'sphinxcontrib.napoleon',
    'myst_parser',
]

templates_path = ['_templates']
source_suffix = ['.rst', '.md']
master_doc = 'index'
language = 'en'
exclude_patterns = ['_build']
pygments_style = 'sphinx'

html_theme = 'sphinx_rtd_theme'
html_theme_options = {
    'style_external_links': True,
    'collapse_navigation': True,
}
html_show_sourcelink = False
html_sidebars = {'**': ['localtoc.html', 'searchbox.html']}
htmlhelp_basename = 'extvcdoc'

autoclass_content = 'both'
autodoc_default_options = {'members': True, 'undoc-members': False}
autodoc_typehints = 'description'
napoleon_google_docstring = True
napoleon_numpy_docstring = False
