from setuptools import setup, find_packages

setup(
    name='smoothgraph-core',
    version='0.1.0',
    packages=find_packages(exclude=['tests', 'tests.*', 'scripts']),
    package_data={'smoothgraph': ['demos/*.json']},
    url='https://github.com/smoothgraph/smoothgraph-core',
    license='MIT',
    author='smoothgraph developers',
    author_email='smoothgraph@users.noreply.github.com',
    description='Learning graphs from smooth signals',
    long_description="Log-degree and l2-degree graph learning with primal-dual solvers, synthetic graph and "
                     "signal generators, evaluation metrics and a reproducible experiment runner",
    long_description_content_type='text/markdown',
    python_requires='>=3.10',
    install_requires=[
        'numpy>=1.26',
        'scipy>=1.11',
        'networkx>=3.2',
        'pandas>=2.1',
        'pytz>=2022.7.1',
        'psutil>=6.1.0',
    ],
    entry_points={
        'console_scripts': ['smoothgraph=smoothgraph.cli:main'],
    },
    keywords=['graph learning', 'graph signal processing', 'laplacian', 'smoothness', 'primal-dual',
              'network inference', 'python3'],
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    project_urls={
        'Bug Reports': 'https://github.com/smoothgraph/smoothgraph-core/issues',
        'Source': 'https://github.com/smoothgraph/smoothgraph-core',
        'Documentation': 'https://smoothgraph-core.readthedocs.io/en/latest/',
    }
)
