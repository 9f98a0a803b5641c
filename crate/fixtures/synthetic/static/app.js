fetch("/api/layers").then(r => r.json()).then(l => console.log(l));
