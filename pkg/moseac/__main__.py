from moseac.main import app

app()
