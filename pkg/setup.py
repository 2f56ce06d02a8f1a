try:
    from setuptools import setup, find_packages
except ImportError:
    from distutils.core import setup, find_packages

import sys
import os

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from gaitprior import __version__

install_requires = [
    'numpy>=1.17',
    'python-dateutil>=2.5.3',
    'progressbar>=2.3',
]

setup(
    name='gaitprior',
    version=__version__,
    description="Latent action priors and style rewards learned from a "
    "single gait cycle, with a from-scratch PPO learner.",

    url='https://github.com/gaitprior/gaitprior',

    classifiers=[
        'Development Status :: 3 - Alpha',
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: Apache Software License',
        'Operating System :: POSIX :: Linux',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
    ],
    keywords=['reinforcement learning', 'locomotion', 'autoencoder', 'ppo'],

    packages=find_packages(exclude=['tests']),
    package_data={'gaitprior': ['data/*.json']},

    install_requires=install_requires,
    include_package_data=True,
    entry_points={
        'console_scripts': ['gaitprior = gaitprior.cli:main'],
    },
)
