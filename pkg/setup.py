from setuptools import find_packages, setup

setup(
	name='relaycov',
	version='1.0.0',
	packages=find_packages(exclude=["examples", "examples.*"]),
	include_package_data=True,
	package_data={
		"relaycov.scenarios": ["*.json"],
		"relaycov.tests.scenario_test_data": ["*.json"],
	},
	zip_safe=False,
	install_requires=[
		"jsons==1.4.0",
		"pydantic==1.7.4",
		"numpy==1.21.6",
		"networkx==2.6.3",
		"pandas==1.3.5",
		"pytest==6.2.5",
		"pyomo==6.4.1"
	],
	entry_points={
		"console_scripts": [
			"relaycov=relaycov.entrypoints.cli.app:main",
		],
	},
)
