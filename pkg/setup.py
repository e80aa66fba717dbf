from setuptools import setup, find_packages

with open('requirements.txt', 'r') as f:
    install_requires = f.read().splitlines()

with open('requirements-extras.txt', 'r') as f:
    install_requires_extras = f.read().splitlines()


setup(
    python_requires='>=3.8.0',
    use_scm_version=True,
    packages=find_packages(exclude=['tests', 'tests.*']),
    package_data={'extvc': ['py.typed', "templates/text/*"]},
    zip_safe=False,
    entry_points={'console_scripts': ['extvc = extvc.cli:main']},
    install_requires=install_requires,
    extras_require={'extras': install_requires_extras},
)
